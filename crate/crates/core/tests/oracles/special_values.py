"""Reference values for the special-function tests.

Digamma/trigamma/tetragamma: upward recurrence to x >= 40 followed by the asymptotic
series with Bernoulli numbers, at 30 significant digits. Log-gamma: Stirling
series after the same shift. Each is cross-checked against mpmath's own
implementation before printing.
"""
from mpmath import mp, mpf, bernoulli, log, pi, psi, loggamma

mp.dps = 30


def digamma_series(x):
    x = mpf(x)
    acc = mpf(0)
    while x < 40:
        acc -= 1 / x
        x += 1
    s = log(x) - 1 / (2 * x)
    for k in range(1, 20):
        s -= bernoulli(2 * k) / (2 * k * x ** (2 * k))
    return acc + s


def trigamma_series(x):
    x = mpf(x)
    acc = mpf(0)
    while x < 40:
        acc += 1 / x ** 2
        x += 1
    s = 1 / x + 1 / (2 * x ** 2)
    for k in range(1, 20):
        s += bernoulli(2 * k) / x ** (2 * k + 1)
    return acc + s


def tetragamma_series(x):
    x = mpf(x)
    acc = mpf(0)
    while x < 40:
        acc -= 2 / x ** 3
        x += 1
    s = -1 / x ** 2 - 1 / x ** 3
    for k in range(1, 20):
        s -= (2 * k + 1) * bernoulli(2 * k) / x ** (2 * k + 2)
    return acc + s


def lgamma_series(x):
    x = mpf(x)
    acc = mpf(0)
    while x < 40:
        acc -= log(x)
        x += 1
    s = (x - mpf(1) / 2) * log(x) - x + log(2 * pi) / 2
    for k in range(1, 20):
        s += bernoulli(2 * k) / (2 * k * (2 * k - 1) * x ** (2 * k - 1))
    return acc + s


POINTS = ["1e-6", "3.7e-6", "1e-3", "0.1", "0.3", "0.5", "1", "1.5", "2", "2.5",
          "3.14159", "7.25", "10", "33.3", "100", "1234.5", "1e5", "1e6"]

for p in POINTS:
    d, t, g = digamma_series(p), trigamma_series(p), lgamma_series(p)
    q = tetragamma_series(p)
    assert abs(q - psi(2, mpf(p))) < mpf("1e-25") * max(1, abs(q))
    assert abs(d - psi(0, mpf(p))) < mpf("1e-25") * max(1, abs(d))
    assert abs(t - psi(1, mpf(p))) < mpf("1e-25") * max(1, abs(t))
    assert abs(g - loggamma(mpf(p))) < mpf("1e-25") * max(1, abs(g))
    print(f'    ({p}, {mp.nstr(d, 22)}, {mp.nstr(t, 22)}, {mp.nstr(g, 22)}, {mp.nstr(q, 22)}),')
