"""Shared fixtures built from DSL text and the shipped corpus."""

import os

from gvbundle.dsl import load, parse_text

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(ROOT, "corpus")


def corpus(name, W=8):
    return load(os.path.join(CORPUS, name), W)


def ws(text, W=8):
    return parse_text(text, "<test>", W)


def corpus_files():
    return sorted(f for f in os.listdir(CORPUS) if f.endswith(".gvb"))


CUBIC = """
manifold C {
  chart A { coords: x:0, xi:1 }
  chart B { coords: y:0, eta:1 }
  overlap A B { y = x + x^3 ; eta = (1 + x^2)*xi
    | inverse: x = %s ; xi = eta/(1 + (%s)^2) }
}
bundle TC = tangent C
"""

CUBIC_INVERSE = "y - y^3 + 3*y^5 - 12*y^7 + 55*y^9"
CUBIC_SHORT = "y - y^3 + 3*y^5"


def cubic(inverse=CUBIC_INVERSE, W=8):
    return ws(CUBIC % (inverse, inverse), W)
