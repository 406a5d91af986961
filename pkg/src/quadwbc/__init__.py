"""Whole-body control stack for a quadruped with calf-mounted grippers.

Subpackages:
    model      kinematics and dynamics of the floating-base model
    wbc        hierarchical whole-body controller and reaction-force QP
    commander  operation modes, transitions, gaits and trajectories
    estimator  kinematic and Kalman-filter state estimation
    sim        penalty-contact rigid-body simulator
    workspace  reachable-volume sampling and self-collision checks
    cli        experiment runners, log export and the teleop server
"""

__version__ = "0.1.0"
