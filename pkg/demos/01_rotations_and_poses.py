"""
Rotations and poses as (R, P) pairs.

A pose is kept as the rotation/translation pair instead of a 4x4
homogeneous matrix.  This walks through the exponential map, composition
and inversion, and checks each against the homogeneous form.
"""
import numpy as np

from stochslam import Pose, orthonormality_error, pose_compose, pose_inverse, skew, so3_exp, vex

# The skew map turns a cross product into a matrix product
v, w = np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0])
print("skew(v) @ w  =", skew(v) @ w)
print("np.cross(v,w)=", np.cross(v, w))
print("vex(skew(v)) =", vex(skew(v)))

# Quarter turn about z sends x to y
r = so3_exp([0, 0, np.pi / 2])
print("\nso3_exp([0,0,pi/2]) @ x =", np.round(r @ [1, 0, 0], 15))
print("orthonormality error    =", orthonormality_error(r))

# Composition agrees with 4x4 multiplication
a = Pose(so3_exp([0.2, -0.1, 0.4]), np.array([1.0, 0.0, 2.0]))
b = Pose(so3_exp([-0.3, 0.5, 0.0]), np.array([0.0, -1.0, 0.5]))
ab = pose_compose(a, b)
print("\n|T(a∘b) - T(a)T(b)| =", np.abs(ab.matrix() - a.matrix() @ b.matrix()).max())
print("|a∘a⁻¹ - I|        =", np.abs(pose_compose(a, pose_inverse(a)).matrix() - np.eye(4)).max())

# Repeated retraction keeps R on the group
r = np.eye(3)
step = so3_exp([0.001, -0.002, 0.0015])
for _ in range(100_000):
    r = r @ step
print(f"\nafter 1e5 retractions, orthonormality error = {orthonormality_error(r):.2e}")
