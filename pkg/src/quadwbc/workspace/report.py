"""Mode-level workspace comparison built on the limb sampler.

Each operation mode is compared against the unmodified robot: the
gripper clouds against the foot clouds of the same limbs, and a
combined ground-frame union across the standing and seated body poses.
The combined rows keep the foot clouds in the modified robot's set,
since mounting a module does not remove the foot.
"""

from __future__ import annotations

from dataclasses import dataclass

from .sampler import (
    DEFAULT_VOXEL,
    VolumeReport,
    WorkspaceCloud,
    merge_clouds,
    mode_torso_pose,
    sample_workspace,
    transform_cloud,
    voxel_volume,
)

FOOT_SELECTORS = ("FR_foot", "FL_foot", "RR_foot", "RL_foot")


@dataclass
class WorkspaceSummary:
    """Volume comparisons per mode plus the clouds behind them."""

    reports: dict[str, VolumeReport]
    clouds: dict[str, WorkspaceCloud]

    def table(self) -> str:
        rows = [f"{'mode':<10} {'volume':>9} {'baseline':>9} {'ratio':>7}"]
        for name, rep in self.reports.items():
            rows.append(f"{name:<10} {rep.volume_m3:>7.3f} m3 "
                        f"{rep.baseline_volume_m3:>7.3f} m3 "
                        f"{rep.expansion_ratio:>7.2f}")
        return "\n".join(rows)


def workspace_report(model, steps=None,
                     voxel_size: float = DEFAULT_VOXEL) -> WorkspaceSummary:
    """Sample every limb and compare gripper reach against foot reach.

    `steps` is None (budgeted default grid) or a scalar applied to all
    joints of every chain; per-joint tuples only make sense for a
    single chain, so pass those to sample_workspace directly.  Single
    mode compares the right gripper against the same leg's bare foot;
    bimanual compares both grippers against both front feet; the
    combined row unions everything over the standing and seated torso
    poses in the ground frame.
    """
    if steps is not None and not isinstance(steps, (int, float)):
        raise ValueError("workspace_report takes scalar steps or None")
    grip_r = sample_workspace(model, "right_gripper", steps=steps)
    grip_l = sample_workspace(model, "left_gripper", steps=steps)
    feet = {s: sample_workspace(model, s, steps=steps)
            for s in FOOT_SELECTORS}

    both_grips = merge_clouds([grip_r, grip_l], "grippers")
    front_feet = merge_clouds([feet["FR_foot"], feet["FL_foot"]],
                              "front_feet")

    stand = mode_torso_pose(model, "single")
    seat = mode_torso_pose(model, "bimanual")
    feet_both_poses = merge_clouds(
        [transform_cloud(c, *stand) for c in feet.values()]
        + [transform_cloud(c, *seat) for c in feet.values()],
        "feet_both_poses")
    ours_combined = merge_clouds(
        [feet_both_poses,
         transform_cloud(grip_r, *stand),
         transform_cloud(both_grips, *seat)],
        "combined")

    reports = {
        "single": voxel_volume(grip_r, voxel_size,
                               baseline=feet["FR_foot"]),
        "bimanual": voxel_volume(both_grips, voxel_size,
                                 baseline=front_feet),
        "combined": voxel_volume(ours_combined, voxel_size,
                                 baseline=feet_both_poses),
    }
    clouds = {"right_gripper": grip_r, "left_gripper": grip_l, **feet,
              "combined": ours_combined, "combined_baseline": feet_both_poses}
    return WorkspaceSummary(reports=reports, clouds=clouds)
