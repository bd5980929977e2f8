"""Regenerates faddeeva_reference.csv with mpmath at 40 significant digits.

Grid: 20 log-spaced radii in [1e-2, 30] times 10 angles covering both
half-planes (offset so no point lies exactly on an axis). Points where
exp(-u^2) overflows a double are tagged `overflow`.
"""
import math
import mpmath as mp

mp.mp.dps = 40

def w(u):
    return mp.exp(-u * u) * mp.erfc(-1j * u)

rows = []
for i in range(20):
    r = 1e-2 * (30 / 1e-2) ** (i / 19)
    for j in range(10):
        theta = -math.pi + (j + 0.5) * 2 * math.pi / 10 + 0.05 * i
        u = complex(r * math.cos(theta), r * math.sin(theta))
        if u.imag < 0 and (u.imag ** 2 - u.real ** 2) > 700.0:
            rows.append(f"{u.real!r},{u.imag!r},overflow,overflow")
            continue
        val = w(mp.mpc(u.real, u.imag))
        rows.append(f"{u.real!r},{u.imag!r},{mp.nstr(val.real, 20)},{mp.nstr(val.imag, 20)}")

with open("faddeeva_reference.csv", "w") as fh:
    fh.write("re,im,w_re,w_im\n")
    fh.write("\n".join(rows) + "\n")

# Near-axis strip where the continued fraction converges slowly.
hard = []
for x in [0.5, 2.0, 3.9, 4.5, 5.5, 6.0, 6.3, 7.0, 8.0, 12.0, 28.0, 45.0]:
    for y in [0.0, 1e-8, 1e-3, 0.1, 1.0, 4.4]:
        for sx in (1, -1):
            u = complex(sx * x, y)
            val = w(mp.mpc(u.real, u.imag))
            hard.append(f"{u.real!r},{u.imag!r},{mp.nstr(val.real, 20)},{mp.nstr(val.imag, 20)}")

with open("faddeeva_near_axis.csv", "w") as fh:
    fh.write("re,im,w_re,w_im\n")
    fh.write("\n".join(hard) + "\n")
