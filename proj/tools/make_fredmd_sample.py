"""Writes data/fredmd_sample.csv: a synthetic panel in the FRED-MD layout.

Levels are built from an 8-factor stationary model and then integrated so
that each series' transform code maps it back to a stationary series.
Mnemonics mimic FRED-MD; the numbers are not real data.
"""
import numpy as np
from pathlib import Path

rng = np.random.default_rng(19590101)
T, r = 732, 8  # 1959-01 .. 2019-12

names = [
    ("RPI", 5), ("W875RX1", 5), ("INDPRO", 5), ("IPFPNSS", 5), ("IPFINAL", 5), ("IPCONGD", 5),
    ("IPDCONGD", 5), ("IPNCONGD", 5), ("IPBUSEQ", 5), ("IPMAT", 5), ("CUMFNS", 2), ("CLF16OV", 5),
    ("CE16OV", 5), ("UNRATE", 2), ("UEMPMEAN", 2), ("CLAIMSx", 5), ("PAYEMS", 5), ("USGOOD", 5),
    ("CES1021000001", 5), ("USCONS", 5), ("MANEMP", 5), ("DMANEMP", 5), ("NDMANEMP", 5), ("SRVPRD", 5),
    ("AWHMAN", 1), ("HOUST", 4), ("HOUSTNE", 4), ("PERMIT", 4), ("M1SL", 6), ("M2SL", 6),
    ("FEDFUNDS", 2), ("GS1", 2), ("GS10", 2), ("T10YFFM", 1), ("BAAFFM", 1), ("EXUSUKx", 5),
    ("WPSFD49207", 6), ("CPIAUCSL", 6), ("PCEPI", 6), ("S&P 500", 5), ("DPCERA3M086SBEA", 5), ("NONREVSL", 7),
]
n = len(names)

# VAR(1) factors with moderate persistence, heterogeneous loadings.
A = np.diag(rng.uniform(0.2, 0.7, r))
f = np.zeros((r, T + 200))
for t in range(1, T + 200):
    f[:, t] = A @ f[:, t - 1] + rng.standard_normal(r)
f = f[:, 200:]
L = rng.standard_normal((n, r)) * rng.uniform(0.2, 1.0, (n, 1))
x = L @ f + rng.standard_normal((n, T)) * rng.uniform(0.6, 1.2, (n, 1))  # stationary target


def integrate(z, code, scale):
    z = z * scale
    if code == 1:
        return 5.0 + z
    if code == 2:
        return 5.0 + np.cumsum(z)
    if code == 3:
        return 100.0 + np.cumsum(np.cumsum(z))
    if code == 4:
        return np.exp(7.0 + z)
    if code == 5:
        return 100.0 * np.exp(np.cumsum(0.002 + z))
    if code == 6:
        return 50.0 * np.exp(np.cumsum(0.003 + np.cumsum(z)))
    if code == 7:
        growth = 0.004 + np.cumsum(z)
        return 1000.0 * np.cumprod(1.0 + growth)
    raise ValueError(code)


scales = {1: 0.5, 2: 0.1, 3: 0.01, 4: 0.1, 5: 0.005, 6: 0.0005, 7: 0.0003}
levels = np.vstack([integrate(x[i], c, scales[c]) for i, (_, c) in enumerate(names)])

dates = [f"{1959 + m // 12}-{m % 12 + 1:02d}-01" for m in range(T)]
out = Path(__file__).resolve().parent.parent / "data" / "fredmd_sample.csv"
with out.open("w") as fh:
    fh.write("sasdate," + ",".join(f'"{nm}"' if " " in nm or "&" in nm else nm for nm, _ in names) + "\n")
    fh.write("Transform:," + ",".join(str(c) for _, c in names) + "\n")
    for t in range(T):
        fh.write(dates[t] + "," + ",".join(f"{levels[i, t]:.6g}" for i in range(n)) + "\n")
print(f"wrote {out} ({n} series x {T} months)")
