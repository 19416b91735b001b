"""Verify every layer's backward pass against central finite differences.

Linear and sigmoid layers check out near float64 precision; the kinked
ones (ReLU, max-pool) are checked away from their kinks and still land
far below the 1e-4 gate.
"""

from candlekit import nn

LAYERS = [
    ("Conv2D 2->3 k3", nn.Conv2D(2, 3, 3)),
    ("Conv2D s2 p1", nn.Conv2D(2, 3, 3, stride=2, pad=1)),
    ("Conv1D p1", nn.Conv1D(2, 3, 3, pad=1)),
    ("Dense 5->4", nn.Dense(5, 4)),
    ("ReLU", nn.ReLU()),
    ("Sigmoid", nn.Sigmoid()),
    ("MaxPool2D 2x2", nn.MaxPool2D(2, 2)),
    ("MaxPool1D 2", nn.MaxPool1D(2, 2)),
    ("Flatten", nn.Flatten()),
    ("Reshape", nn.Reshape((2, 6))),
    ("Upsample x2", nn.NearestUpsample2D(2)),
]

print(f"{'layer':<16} {'max rel err':>12}")
for name, spec in LAYERS:
    err = max(nn.grad_check(spec, seed) for seed in (1, 2, 3))
    print(f"{name:<16} {err:>12.2e}")

for kind in ("bce", "mse"):
    err = max(nn.grad_check_loss(kind, seed) for seed in (1, 2, 3))
    print(f"{'loss ' + kind:<16} {err:>12.2e}")
