"""Regenerate tests/data/specfun_tables.inc from mpmath (50 significant digits).

The Kummer rows use the argument triples (a, b, z) that the 3/2 characteristic
function produces for the time-dependent parameter set used in the tests:
kappa=22.84, eps=8.56, rho=-0.9, theta(t) = 0.467 + 0.05 (T - t), T = 0.25,
omega = k pi / 20.
"""

import random
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50
rng = random.Random(20240611)

KAPPA, EPS, RHO = mp.mpf("22.84"), mp.mpf("8.56"), mp.mpf("-0.9")
TH0, TH1, T = mp.mpf("0.467"), mp.mpf("0.05"), mp.mpf("0.25")


def theta(s):
    return TH0 + TH1 * (T - s)


def big_c(t, u):
    def A(s):
        return mp.e ** mp.quad(theta, [t, s])
    return EPS**2 / 2 * mp.quad(A, [t, u])


def cf32_args(omega, v, t, u):
    w = mp.mpf(omega)
    kt = KAPPA - 1j * w * RHO * EPS
    c = mp.sqrt((mp.mpf(1) / 2 + kt / EPS**2) ** 2 + (1j * w + w**2) / EPS**2)
    alpha = -mp.mpf(1) / 2 - kt / EPS**2 + c
    beta = 2 * (1 + alpha + kt / EPS**2)
    z = -1 / (big_c(t, u) * v)
    return alpha, beta, z


def fmt(x):
    return mp.nstr(x, 20, min_fixed=-1, max_fixed=-1) if x != 0 else "0.0"


def cpair(z):
    z = mp.mpc(z)
    return "{" + fmt(z.real) + ", " + fmt(z.imag) + "}"


lines = ["// Generated by tests/oracles/make_specfun_tables.py; do not edit.", ""]

# log-gamma: points spread over |z| <= 50 including the left half plane
lg = []
for i in range(48):
    r = rng.uniform(0.05, 50.0) ** 1.0
    th = rng.uniform(-3.1, 3.1)
    lg.append(mp.mpc(r * mp.cos(th), r * mp.sin(th)))
for v in ["0.5", "1", "3+4j", "-2.5+0.1j", "10.25-7j", "0.1+30j", "-7.3", "-0.6+0.0j",
          "2.6+1.5j", "3.4+0.2j", "1e-3+1e-3j", "45+2j", "-20.5+3j", "0.01", "5", "1.5-20j"]:
    lg.append(mp.mpc(complex(v)))
lines.append("struct LogGammaRow { double z[2]; double gamma_abs_log; double gamma[2]; };")
lines.append("// gamma[] holds Gamma(z) / |Gamma(z)|; gamma_abs_log is log|Gamma(z)|")
lines.append("static const LogGammaRow kLogGammaTable[] = {")
for z in lg:
    g = mp.gamma(z)
    lines.append("    {" + cpair(z) + ", " + fmt(mp.log(abs(g))) + ", " + cpair(g / abs(g)) + "},")
lines.append("};")
lines.append("")

# Kummer M on the 3/2 argument range
rows = []
elapsed = [(0.0, 0.002), (0.0, 0.01), (0.05, 0.1), (0.0, 0.25), (0.15, 0.25), (0.2, 0.21)]
vs = [0.1, 0.25, 0.5, 1.0, 1.9]
while len(rows) < 64:
    k = rng.randint(0, 64)
    v = rng.choice(vs)
    t, u = rng.choice(elapsed)
    a, b, z = cf32_args(k * mp.pi / 20, v, mp.mpf(t), mp.mpf(u))
    rows.append((a, b, z, mp.hyp1f1(a, b, z)))
lines.append("struct KummerRow { double a[2]; double b[2]; double z[2]; double m[2]; };")
lines.append("static const KummerRow kKummerTable[] = {")
for a, b, z, m in rows:
    lines.append("    {" + ", ".join(cpair(x) for x in (a, b, z, m)) + "},")
lines.append("};")
lines.append("")

# K1 on a log-spaced grid plus the documented spot values
xs = [mp.mpf(10) ** (mp.mpf(-3) + 5 * mp.mpf(i) / 61) for i in range(62)] + [mp.mpf(1), mp.mpf(50)]
lines.append("struct BesselRow { double x; double k1; };")
lines.append("static const BesselRow kBesselK1Table[] = {")
for x in xs:
    lines.append("    {" + fmt(x) + ", " + fmt(mp.besselk(1, x)) + "},")
lines.append("};")

out = Path(__file__).resolve().parent.parent / "data" / "specfun_tables.inc"
out.write_text("\n".join(lines) + "\n")
print("wrote", out)
