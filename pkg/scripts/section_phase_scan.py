"""Fixed points of the hopper return map on ground sections {phi = phase} for a
range of phases, with the return period and multipliers at each.

Shows which section phases meet the period-one orbit during its ground arc.

    python3 scripts/section_phase_scan.py [--n 12]
"""

import argparse
import math

from hybrid_floquet import HybridError, StepperConfig, floquet_report, hopper_section, make_hopper


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=12)
    args = ap.parse_args()
    sys_, cfg = make_hopper(), StepperConfig()
    print(f"{'phase':>8} {'y':>9} {'ydot':>9} {'period':>8}  multipliers")
    for i in range(args.n):
        phase = 2 * math.pi * i / args.n
        try:
            rep = floquet_report(sys_, hopper_section(phase), [2.0, 2.0], cfg, max_time=20.0)
        except HybridError as exc:
            print(f"{phase:8.4f}  {type(exc).__name__}")
            continue
        mults = ", ".join(f"{z.real:+.3f}{z.imag:+.3f}j" for z in rep.multipliers)
        y, yd = rep.fixed_point
        print(f"{phase:8.4f} {y:9.5f} {yd:9.5f} {rep.period:8.4f}  {mults}")


if __name__ == "__main__":
    main()
