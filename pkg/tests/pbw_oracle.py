"""Independent CBH oracle: exact arithmetic in U(g) truncated by weight.

Each generator carries its filtration weight (1 outside the derived
algebra, 2 in it, 3 in g^(2)); words of total weight above 3 span an
ideal because straightening corrections never lower weight, so the
quotient has the PBW-ordered words of weight <= 3 as a basis.  Elements
are dicts mapping such words to rationals.  The Lie algebra embeds
faithfully for step <= 3, so log(exp X exp Y) recovers the group product
without touching bch_product.
"""
from __future__ import annotations

from fractions import Fraction

WEIGHT_CAP = 3


class Enveloping:
    def __init__(self, sc):
        self.sc = sc
        series = sc.derived_series
        v1 = series[0] if len(series) >= 2 else None
        v2 = series[1] if len(series) >= 3 else None
        self.weight = []
        for i in range(sc.dim):
            b = sc.basis_vector(i)
            if v1 is None or not v1.contains(b):
                self.weight.append(1)
            elif v2 is None or not v2.contains(b):
                self.weight.append(2)
            else:
                self.weight.append(3)

    def _w(self, word):
        return sum(self.weight[i] for i in word)

    def from_vector(self, v):
        out = {}
        for i, c in enumerate(v):
            if c:
                out[(i,)] = Fraction(c)
        return out

    def _straighten(self, word, coeff, acc):
        """Accumulate the PBW normal form of one (possibly unordered) word."""
        if self._w(word) > WEIGHT_CAP:
            return
        for pos in range(len(word) - 1):
            a, b = word[pos], word[pos + 1]
            if a > b:
                swapped = word[:pos] + (b, a) + word[pos + 2:]
                self._straighten(swapped, coeff, acc)
                # commutator correction: x_a x_b = x_b x_a + [x_a, x_b]
                br = self.sc.bracket(self.sc.basis_vector(a), self.sc.basis_vector(b))
                for k, c in enumerate(br):
                    if c:
                        corr = word[:pos] + (k,) + word[pos + 2:]
                        self._straighten(corr, coeff * c, acc)
                return
        acc[word] = acc.get(word, Fraction(0)) + coeff

    def mul(self, x, y):
        acc = {}
        for wx, cx in x.items():
            for wy, cy in y.items():
                if self._w(wx) + self._w(wy) <= WEIGHT_CAP:
                    self._straighten(wx + wy, cx * cy, acc)
        return {w: c for w, c in acc.items() if c}

    def exp(self, v):
        x = self.from_vector(v)
        out = {(): Fraction(1)}
        power = {(): Fraction(1)}
        fact = 1
        for k in range(1, WEIGHT_CAP + 1):
            power = self.mul(power, x)
            fact *= k
            for w, c in power.items():
                out[w] = out.get(w, Fraction(0)) + c / fact
        return {w: c for w, c in out.items() if c}

    def log(self, u):
        n = {w: c for w, c in u.items() if w != ()}
        assert u.get((), Fraction(0)) == 1
        out = {}
        power = {(): Fraction(1)}
        sign = 1
        for k in range(1, WEIGHT_CAP + 1):
            power = self.mul(power, n)
            for w, c in power.items():
                out[w] = out.get(w, Fraction(0)) + Fraction(sign, k) * c
            sign = -sign
        return {w: c for w, c in out.items() if c}

    def group_product_log(self, va, vb):
        """log(exp(va) exp(vb)) as a coordinate vector; asserts the result
        is a Lie element (only degree-one PBW words survive)."""
        prod = self.mul(self.exp(va), self.exp(vb))
        lg = self.log(prod)
        out = [Fraction(0)] * self.sc.dim
        for w, c in lg.items():
            assert len(w) == 1, f"non-Lie component {w} in CBH log"
            out[w[0]] = c
        return tuple(out)
