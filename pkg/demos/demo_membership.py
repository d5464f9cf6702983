# Windowed membership check for transform-side growth classes
# ===========================================================
#
# A coefficient distribution is admissible for the solvers when its
# transform has enough polynomially bounded derivatives.  Globally that
# is not checkable by machine, so the checker fits the growth of the
# running supremum of |d^beta u_hat| over expanding sub-windows and
# compares the fitted exponent against a degree cap.  The classic
# diagnostic case is a tabulated transform whose first derivative grows
# linearly but whose second derivative blows up faster than every
# polynomial.

import numpy as np

from vwschro import Delta, FourierTable, check_membership

# A point mass passes at every order: its transform is unimodular.
rep = check_membership(Delta(0.0), 5, window=(-6, 6), max_poly_degree=8,
                       n_eval=20001)
print("point mass, orders 0..5:",
      "pass" if rep.passed else "fail",
      {k: round(v, 2) for k, v in rep.exponents.items()})

# The oscillatory table sin(e^{xi^2}) e^{-xi^2}: bounded, first
# derivative grows like |xi|, second derivative inherits a factor
# e^{xi^2} and overwhelms the degree cap on the window.
xi = np.linspace(-6.0, 6.0, 2**20 + 1)
tab = FourierTable(xi=xi, values=np.sin(np.exp(xi**2)) * np.exp(-(xi**2)))
for i in (1, 2):
    rep = check_membership(tab, i, window=(-6, 6), max_poly_degree=8)
    worst = max(rep.exponents.values())
    print(f"oscillatory table, order {i}: "
          f"{'pass' if rep.passed else 'fail'} (max fitted exponent {worst:.2f})")

print("\nnote:", rep.note)
