"""Contact-drop curves for one object pushed at three heights.

Prints x, theta and R*theta tables for each height, plus the onset slope
and the push distance at which the contact reaches the sensor edge.

    python3 scripts/tip_curves.py --object wooden_box --heights 75 150 225
"""
import argparse

import numpy as np

from tactile_cues.sim import load_catalog
from tactile_cues.tipping import TipScenario, contact_drop, onset_slope, tip_angle, x_max


def curve(s: TipScenario, steps: int):
    xs = np.linspace(0.0, x_max(s), steps + 1)
    th = np.array([tip_angle(s, x) for x in xs])
    return xs, th, np.array([contact_drop(s, t) for t in th])


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--object", default="wooden_box")
    ap.add_argument("--radius", type=float, default=372.0)
    ap.add_argument("--heights", type=float, nargs="+", default=None,
                    help="contact heights in mm (default: 1/3, 1/2 and 2/3 of the object height)")
    ap.add_argument("--steps", type=int, default=10)
    args = ap.parse_args()

    obj = {o.name: o for o in load_catalog()}[args.object]
    heights = args.heights or [obj.height * f for f in (1 / 3, 1 / 2, 2 / 3)]
    for h in heights:
        s = TipScenario(args.radius, obj.push_width, h)
        xs, th, drop = curve(s, args.steps)
        print(f"# {obj.name}: w = {s.w:g} mm, h = {h:.1f} mm, onset slope {onset_slope(s):.3f}, "
              f"x_max {x_max(s):.2f} mm")
        print("x_mm\ttheta_rad\tdrop_mm")
        for row in zip(xs, th, drop):
            print("\t".join(f"{v:.4f}" for v in row))
        print()


if __name__ == "__main__":
    main()
