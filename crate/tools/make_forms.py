#!/usr/bin/env python3
"""Writes newform coefficient files into data/.

Forms produced:

* 2.8.a.a      eta(z)^8 eta(2z)^8, weight 8, level 2
* 1.30.a.a     the two conjugate eigenforms of S_30(1), over Q(sqrt(51349))
* 2.30 newforms of S_30(Gamma0(2)), split off the old space with T_3

Usage: python3 tools/make_forms.py [--cutoff 4200] [--out data]
"""

import argparse
import json
from fractions import Fraction
from pathlib import Path

import sympy
from flint import fmpz_poly


def sigma(k, x):
    s = [0] * (x + 1)
    for d in range(1, x + 1):
        dk = d**k
        for n in range(d, x + 1, d):
            s[n] += dk
    return s


def eisenstein(k, x):
    c = {2: -24, 4: 240, 6: -504}[k]
    s = sigma(k - 1, x)
    return fmpz_poly([1] + [c * s[n] for n in range(1, x + 1)])


def euler_product(x):
    """prod (1 - q^n) mod q^(x+1) from the pentagonal number theorem."""
    c = [0] * (x + 1)
    k = 0
    while True:
        done = True
        for j in (k, -k) if k else (0,):
            e = j * (3 * j - 1) // 2
            if e <= x:
                c[e] = -1 if j % 2 else 1
                done = False
        if done and k:
            break
        k += 1
    return fmpz_poly(c)


def inflate(f, m, x):
    c = [0] * (x + 1)
    for i, v in enumerate(f.coeffs()):
        if i * m <= x:
            c[i * m] = int(v)
    return fmpz_poly(c)


def coeffs(f, x):
    c = [int(v) for v in f.coeffs()]
    return c + [0] * (x + 1 - len(c))


def delta(x):
    return euler_product(x).pow_trunc(24, x + 1).left_shift(1).truncate(x + 1)


def eta8_eta8(x):
    e = euler_product(x)
    e2 = inflate(e, 2, x)
    return e.pow_trunc(8, x + 1).mul_low(e2.pow_trunc(8, x + 1), x + 1).left_shift(1).truncate(x + 1)


def echelon(rows):
    """Row-reduce q-expansions (lists of Fractions); returns the rows and pivots."""
    rows = [list(r) for r in rows]
    pivots = []
    r = 0
    for col in range(len(rows[0])):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][col]
        rows[r] = [v / p for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def hecke_matrix(basis, pivots, p, k, level):
    """Matrix of T_p (p prime to the level) on an echelon basis."""
    n = len(basis)
    m = sympy.zeros(n, n)
    for j, g in enumerate(basis):
        for i, col in enumerate(pivots):
            v = g[p * col]
            if col % p == 0:
                v += Fraction(p) ** (k - 1) * g[col // p]
            m[i, j] = sympy.Rational(v.numerator, v.denominator)
    return m


def split_sqrt(v, d):
    """Writes a sympy number in Q(sqrt d) as (x, y) with v = x + y sqrt d."""
    v = sympy.nsimplify(sympy.expand(v))
    y = sympy.expand(v).coeff(sympy.sqrt(d))
    x = sympy.expand(v - y * sympy.sqrt(d))
    return sympy.Rational(x), sympy.Rational(y)


def squarefree_part(n):
    f = sympy.factorint(n)
    out, sq = 1, 1
    for p, e in f.items():
        out *= p ** (e % 2)
        sq *= p ** (e // 2)
    return out, sq


def write(path, level, weight, label, xs, ys=None, d=None, embedding=1):
    doc = {
        "level": level,
        "weight": weight,
        "label": label,
        "coefficients": [str(v) for v in xs],
    }
    if ys is not None:
        doc["hecke_field"] = {
            "discriminant": str(d),
            "embedding": embedding,
            "sqrt_coefficients": [str(v) for v in ys],
        }
    path.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {path} ({len(xs)} coefficients)")


def eigenforms(basis, pivots, k, level, x):
    """Normalized eigenforms of T_p on span(basis), p the least prime not
    dividing the level, as coefficient lists over Q or Q(sqrt d)."""
    p = next(q for q in (2, 3, 5, 7) if level % q)
    m = hecke_matrix(basis, pivots, p, k, level)
    out = []
    for val, _, vecs in m.eigenvects():
        for v in vecs:
            v = v / v[0]
            out.append((val, [sympy.nsimplify(c) for c in v]))
    return out, m


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cutoff", type=int, default=4200)
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    x = args.cutoff
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    big = 3 * x + 3

    # 2.8.a.a
    f = coeffs(eta8_eta8(x), x)
    write(out / "2.8.a.a.json", 2, 8, "2.8.a.a", f[1 : x + 1])

    # S_30(1) = span(Delta E4^3 E6, Delta^2 E6)
    dl = delta(big)
    e4, e6 = eisenstein(4, big), eisenstein(6, big)
    g_a = dl.mul_low(e4.pow_trunc(3, big + 1), big + 1).mul_low(e6, big + 1)
    g_b = dl.mul_low(dl, big + 1).mul_low(e6, big + 1)
    rows, piv = echelon([[Fraction(v) for v in coeffs(g, big)[: 2 * x + 3]] for g in (g_a, g_b)])
    g1, g2 = rows
    # f = g1 + alpha g2 with alpha^2 - g2(4) alpha - (g1(4) + 2^29) = 0
    b, c = g2[4], g1[4] + 2**29
    disc = b * b + 4 * c
    assert disc.denominator == 1
    d, s = squarefree_part(int(disc))
    print(f"S_30(1): a(2) = {b}/2 +- {s}/2 sqrt({d})")
    for emb, name in ((-1, "1.30.a.a.1"), (1, "1.30.a.a.2")):
        xs = [g1[n] + b / 2 * g2[n] for n in range(1, x + 1)]
        ys = [Fraction(s, 2) * g2[n] for n in range(1, x + 1)]
        write(out / f"{name}.json", 1, 30, name, xs, ys, d, emb)

    # S_30(Gamma0(2)) = eta^8 eta(2z)^8 * M_22(Gamma0(2)), M generated by
    # F = 2 E2(2z) - E2(z) and E4
    e2 = eisenstein(2, big)
    ff = 2 * inflate(e2, 2, big) - e2
    d2 = eta8_eta8(big)
    basis = []
    for bb in range(6):
        a = 11 - 2 * bb
        g = d2.mul_low(ff.pow_trunc(a, big + 1), big + 1).mul_low(e4.pow_trunc(bb, big + 1), big + 1)
        basis.append([Fraction(v) for v in coeffs(g, big)])
    rows, piv = echelon([r[:60] for r in basis])
    # rebuild the full expansions with the same row operations
    full = solve_rows(basis, rows, piv)
    forms, _ = eigenforms([r[:60] for r in full], piv, 30, 2, x)
    # old eigenvalues of T_3 are a_f(3) of the level 1 forms
    old = [
        sympy.nsimplify(g1[3] + b / 2 * g2[3]) + emb * sympy.nsimplify(Fraction(s, 2) * g2[3]) * sympy.sqrt(d)
        for emb in (-1, 1)
    ]
    news = [(val, vec) for val, vec in forms if all(sympy.simplify(val - o) != 0 for o in old)]
    print(f"S_30(2): T_3 eigenvalues {[str(v) for v, _ in forms]}, {len(news)} new")
    names = "abcdefgh"
    for i, (val, vec) in enumerate(sorted(news, key=lambda t: float(t[0]))):
        coeffs_q = [sum(Fraction(str(cv)) * full[j][n] for j, cv in enumerate(vec)) for n in range(1, x + 1)]
        write(out / f"2.30.a.{names[i]}.json", 2, 30, f"2.30.a.{names[i]}", coeffs_q)


def solve_rows(basis, rows, piv):
    """Combinations of the full basis expansions equal to the echelon rows."""
    n = len(basis)
    a = sympy.Matrix([[sympy.Rational(b[c].numerator, b[c].denominator) for c in piv] for b in basis]).T
    out = []
    for r in rows:
        rhs = sympy.Matrix([sympy.Rational(r[c].numerator, r[c].denominator) for c in piv])
        w = a.LUsolve(rhs)
        ws = [Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1])) for v in w]
        out.append([sum(ws[j] * basis[j][c] for j in range(n)) for c in range(len(basis[0]))])
    return out


if __name__ == "__main__":
    main()
