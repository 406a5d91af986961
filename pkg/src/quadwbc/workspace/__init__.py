"""Limb workspace sampling, collision rejection, and volume reports."""

from .report import FOOT_SELECTORS, WorkspaceSummary, workspace_report
from .sampler import (
    DEFAULT_VOXEL,
    PARKED_Q,
    SELECTORS,
    VolumeReport,
    WorkspaceCloud,
    chain_joints,
    merge_clouds,
    mode_torso_pose,
    sample_workspace,
    self_collision,
    transform_cloud,
    voxel_keys,
    voxel_volume,
)

__all__ = [
    "DEFAULT_VOXEL",
    "FOOT_SELECTORS",
    "PARKED_Q",
    "SELECTORS",
    "WorkspaceSummary",
    "workspace_report",
    "VolumeReport",
    "WorkspaceCloud",
    "chain_joints",
    "merge_clouds",
    "mode_torso_pose",
    "sample_workspace",
    "self_collision",
    "transform_cloud",
    "voxel_keys",
    "voxel_volume",
]
