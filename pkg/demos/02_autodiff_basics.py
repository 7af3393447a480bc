"""A tour of the tensor engine: forward ops, gradients, gradient checking,
and the gradient-of-gradient path that powers the critic's penalty term.

Run:  python demos/02_autodiff_basics.py
"""

import numpy as np

from dyntex import Tensor, conv3d, grad, grad_check, leaky_relu

rng = np.random.default_rng(0)

# --- gradients are one function call away -------------------------------
x = Tensor(rng.standard_normal((1, 3, 4, 8, 8)).astype(np.float32), requires_grad=True)
w = Tensor(rng.standard_normal((5, 3, 3, 3, 3)).astype(np.float32) * 0.1, requires_grad=True)
score = leaky_relu(conv3d(x, w), 0.2).mean()
gx, gw = grad(score, [x, w])
print(f"score = {score.item():+.4f}")
print(f"|dscore/dx| = {np.abs(gx.data).mean():.5f}   |dscore/dw| = {np.abs(gw.data).mean():.5f}")

# --- every kernel is validated against finite differences ----------------
err = grad_check(lambda t: leaky_relu(conv3d(t, w), 0.2).mean(), x)
print(f"grad_check(conv -> lrelu -> mean) max rel err = {err:.2e}")

# --- gradients are graph nodes, so they can be differentiated again ------
# g(x) = ||d score/d x||^2 is itself a function of w; its gradient drives
# the one-Lipschitz penalty during critic training.
xt = Tensor(x.data.copy(), requires_grad=True)
s = leaky_relu(conv3d(xt, w), 0.2).mean()
(gxt,) = grad(s, [xt], create_graph=True)
gnorm2 = (gxt * gxt).sum()
(gw2,) = grad(gnorm2, [w])
print(f"||dD/dx||^2 = {gnorm2.item():.6f}; its gradient w.r.t. w has "
      f"|mean| = {np.abs(gw2.data).mean():.2e} (second-order path)")
