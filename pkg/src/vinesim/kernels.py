"""Kernel backend selection.

Imports the compiled extension when it is available, otherwise the pure
Python implementation. Set VINESIM_PURE=1 to force the pure backend (used
by the parity tests and the benchmark). Both backends produce bit-identical
results; see _kernels_py for the contract.
"""

import os

from vinesim import _kernels_py

if os.environ.get("VINESIM_PURE"):
    _impl = _kernels_py
else:
    try:
        from vinesim import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

COMPILED = bool(getattr(_impl, "COMPILED", False))

ARC_T_PEAK = _kernels_py.ARC_T_PEAK
ARC_REACH = _kernels_py.ARC_REACH
ARC_Z_MIN = _kernels_py.ARC_Z_MIN

quat_to_arc = _impl.quat_to_arc
arc_to_quat = _impl.arc_to_quat
arc_to_tip = _impl.arc_to_tip
tip_to_arc = _impl.tip_to_arc
arc_t_for_z = _impl.arc_t_for_z
arc_pose_at = _impl.arc_pose_at
quat_mul = _impl.quat_mul
quat_rot = _impl.quat_rot
quat_rot_inv = _impl.quat_rot_inv
superpose_tip = _impl.superpose_tip
pressures_at = _impl.pressures_at
solve_pressures_bisect = _impl.solve_pressures_bisect
