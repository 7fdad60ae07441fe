"""Independent arbitrary-precision evaluation of the pseudophakic eye chain.

Prints the frozen values used by tests/test_optics.cpp and tests/test_solver.cpp.
Run: python3 tests/reference/optics_reference.py
"""
from mpmath import mp, mpf, matrix, sqrt, findroot

mp.dps = 50

N_V, N_C, N_L = mpf("1.336"), mpf("1.376"), mpf("1.46")
GULL = mpf("6.8") / mpf("7.7")
D = mpf("0.012")


def prop(x):
    return matrix([[1, x], [0, 1]])


def refr(n1, n2, r):
    return matrix([[1, 0], [(n1 - n2) / (n2 * r), n1 / n2]])


def target(ref_t, sign=1):
    return matrix([[1, 0], [-sign * ref_t, 1]])


def chain(r, al, cct, acd, k, ref_t, lt, sign=1):
    pcd = al - cct - acd - lt
    return (prop(pcd) * refr(N_L, N_V, -r) * prop(lt) * refr(N_V, N_L, r) * prop(acd)
            * refr(N_C, N_V, GULL * k) * prop(cct) * refr(1, N_C, k) * prop(D) * target(ref_t, sign))


def power(r, lt):
    dn = N_L - N_V
    return dn * (2 / r - dn * lt / (N_L * r * r))


def bisect(f, lo, hi):
    flo = f(lo)
    for _ in range(200):
        mid = (lo + hi) / 2
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


eye = dict(al=mpf("0.0236"), cct=mpf("0.00055"), acd=mpf("0.0045"), k=mpf("0.0077"))
lt = mpf("0.001")
m = chain(mpf("0.012"), eye["al"], eye["cct"], eye["acd"], eye["k"], 0, lt)
print("m00(r=12mm) =", mp.nstr(m[0, 0], 20))
print("det =", mp.nstr(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0], 20))
print("refraction m10 (1 -> 1.376, r=7.7mm) =", mp.nstr((1 - N_C) / (N_C * mpf("0.0077")), 12))
a, e = mpf("0.003"), mpf("0.0002")
r = mpf("0.0124")
print("sag LT(12.4mm) =", mp.nstr(e + 2 * (r - sqrt(r * r - a * a)), 12))
print("power(12.4mm, LT=1mm) =", mp.nstr(power(r, lt), 12))
for ref_t in (0, -1):
    for sign in (1, -1):
        rs = bisect(lambda x: chain(x, eye["al"], eye["cct"], eye["acd"], eye["k"], ref_t, lt, sign)[0, 0],
                    mpf("0.005"), mpf("0.2"))
        print(f"ref_t={ref_t} sign={'standard' if sign == 1 else 'flipped'}: R* =", mp.nstr(rs, 16),
              "P =", mp.nstr(power(rs, lt), 12))
rs = bisect(lambda x: chain(x, mpf("0.026"), eye["cct"], eye["acd"], eye["k"], 0, lt)[0, 0], mpf("0.005"), mpf("0.2"))
print("al=26mm: R* =", mp.nstr(rs, 16), "P =", mp.nstr(power(rs, lt), 12))
