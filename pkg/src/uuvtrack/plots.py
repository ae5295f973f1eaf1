"""SVG rendering of run traces."""

from __future__ import annotations

from .sim import SimTrace


def render_trace_svg(trace: SimTrace, path: str, title: str | None = None) -> None:
    """Write a three-panel figure: planar track, velocity commands, applied torque."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = trace.t
    fig, (ax_xy, ax_cmd, ax_tau) = plt.subplots(1, 3, figsize=(15, 4.5))

    ax_xy.plot(trace["ref_x"], trace["ref_y"], "k--", label="reference")
    ax_xy.plot(trace["true_x"], trace["true_y"], "b-", label="vehicle")
    ax_xy.plot(trace["true_x"][0], trace["true_y"][0], "bo", ms=5)
    ax_xy.set_xlabel("x [m]")
    ax_xy.set_ylabel("y [m]")
    ax_xy.set_aspect("equal", adjustable="datalim")
    ax_xy.legend(loc="best", fontsize=8)
    ax_xy.set_title("planar track")

    ax_cmd.plot(t, trace["cmd_u"], label="u_c [m/s]")
    ax_cmd.plot(t, trace["cmd_v"], label="v_c [m/s]")
    ax_cmd.plot(t, trace["cmd_r"], label="r_c [rad/s]")
    ax_cmd.set_xlabel("t [s]")
    ax_cmd.legend(loc="best", fontsize=8)
    ax_cmd.set_title("velocity commands")

    ax_tau.plot(t, trace["tau_x"], label="surge [N]")
    ax_tau.plot(t, trace["tau_y"], label="sway [N]")
    ax_tau.plot(t, trace["tau_n"], label="yaw [N m]")
    ax_tau.set_xlabel("t [s]")
    ax_tau.legend(loc="best", fontsize=8)
    ax_tau.set_title("applied torque")

    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
