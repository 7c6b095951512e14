"""The three objectives and their gradients, on hand-sized examples.

The single-label loss shifts logits by tau * log(prior) before the
softmax, so rare classes stop being systematically suppressed.  The binary
variant applies the same shift before per-class sigmoids over a
multi-label target.  The combined objective is the weighted sum.
"""
import numpy as np

from cuekit import LossConfig, bla_loss, cue_loss, la_loss

pi = np.array([0.7, 0.2, 0.1])  # long-tailed prior
logits = np.zeros(3)

print("uninformative logits, tail ground truth (y=2):")
loss, grad = la_loss(logits, 2, pi, tau=1.0)
print(f"  adjusted loss={loss:.4f}  gradient={np.round(grad, 3).tolist()}")
loss0, _ = la_loss(logits, 2, pi, tau=0.0)
print(f"  unadjusted   ={loss0:.4f}  (plain cross-entropy)")
print("  the shift charges extra for predicting the head class blindly\n")

target = np.array([0, 1, 1])  # ground truth 2 plus its cue, class 1
loss, grad = bla_loss(logits, target, pi, tau_b=1.0)
print(f"multi-label target {target.tolist()}: bla loss={loss:.4f}")
print(f"  gradient={np.round(grad, 3).tolist()}  (pushes both positives up)\n")

config = LossConfig(tau=1.0, tau_b=1.0, lambda_zs=0.5, lambda_llm=0.5)
value = cue_loss(logits, 2, target, target, pi, config)
print("combined objective:")
print(f"  total={value.total:.4f} = la {value.la:.4f} "
      f"+ 0.5*bla_zs {value.bla_zs:.4f} + 0.5*bla_llm {value.bla_llm:.4f}")

# gradients check out against central finite differences
h = 1e-4
fd = np.zeros(3)
for i in range(3):
    up, down = logits.copy(), logits.copy()
    up[i] += h
    down[i] -= h
    fd[i] = (cue_loss(up, 2, target, target, pi, config).total
             - cue_loss(down, 2, target, target, pi, config).total) / (2 * h)
print(f"  analytic grad={np.round(value.grad, 6).tolist()}")
print(f"  finite diff  ={np.round(fd, 6).tolist()}")
