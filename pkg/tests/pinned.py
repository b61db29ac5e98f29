"""Frozen regression values for the bound formulas.

Each value was first evaluated in double precision and then cross-checked by
hand: e.g. the r=1 unfolding total is 1000^4 * (12 ln(1e12) + 12) and the
r=150 CP total is the 6r branch, 6 * 150 * 1000^2.
"""

FIGURE1_R1 = (1, 343572253391142.56, 473911848.41282105)
FIGURE1_R150 = (150, 403699876920297.56, 900000000.0)

# n=1000, k=10, eps=0.001
MATRIX_L = 177.78612669557128
# n=1000, d=7, r=50, eps=0.001 (unfolding with |I|=3)
UNFOLDING_L = 390.5165294562803
UNFOLDING_TOTAL = 390516529456280.3
CP_FINITE_L = 509.1200554616743
CP_FINITE_TOTAL = 509120055.46167433
CP_UNIQUE_L = 540.3116785868718
CP_UNIQUE_TOTAL = 540311678.5868719
P_FINITE = 0.00017782794151301233
P_UNIQUE = 0.00017782794154420396
SUCCESS_PROBABILITY = 0.999

# dims (10, 10, 10), p = 0.3, seed 12345
GEN_COUNT = 305
GEN_FIRST = ((0, 0, 0), (0, 0, 7), (0, 1, 0))
