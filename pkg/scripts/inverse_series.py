"""Print the formal inverse of y = x + x^3 through a given order.

Iterates x <- y - x^3, which gains one order per step, and prints a line
ready to paste after ``inverse:`` in a .gvb overlap block.

    python scripts/inverse_series.py 9
"""

import argparse

from gvbundle.series import GeneratorSignature, GradedFunction


def inverse_cubic(order: int) -> GradedFunction:
    sig = GeneratorSignature.build([("y", 0)])
    y = GradedFunction.generator(sig, "y", order)
    x = y
    for _ in range(order):
        x = y - x * x * x
    return x


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("order", type=int, nargs="?", default=9)
    args = ap.parse_args()
    x = inverse_cubic(args.order)
    print(f"x = {x}")


if __name__ == "__main__":
    main()
