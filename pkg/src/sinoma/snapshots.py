"""Forward-backward snapshot matrix built from the received frames.

Within each frame, length-l sliding windows of the M received samples
form a Hankel block; appending the flipped-and-conjugated copy of the
block doubles the column count (forward-backward averaging). Stacking
the per-frame blocks side by side gives the l x 2J(M-l+1) data matrix
whose noise-free rank equals the number of active users.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# Snapshot lengths tuned per sequence length M.
SNAPSHOT_LEN_TABLE = {32: 20, 48: 40, 64: 50, 80: 60, 96: 78, 112: 90}


def default_snapshot_len(m: int) -> int:
    """Snapshot length for a given M: tuned table entry when available,
    otherwise round(0.78*M) clamped into (floor(M/2), M-1]."""
    if m in SNAPSHOT_LEN_TABLE:
        return SNAPSHOT_LEN_TABLE[m]
    l = int(round(0.78 * m))
    return max(m // 2 + 1, min(l, m - 1))


@dataclass(frozen=True)
class SnapshotMatrix:
    """The stacked data matrix plus the dimensions it came from."""

    s_bar: np.ndarray   # (l, 2*J*(M-l+1))
    l: int
    num_frames: int
    seq_len: int

    @property
    def num_columns(self) -> int:
        return 2 * self.num_frames * (self.seq_len - self.l + 1)


def frame_snapshots(y_frame: np.ndarray, l: int) -> np.ndarray:
    """Hankel arrangement of one frame: column m holds samples
    y[m..m+l-1], for m = 0..M-l."""
    y_frame = np.asarray(y_frame)
    m = y_frame.shape[0]
    if not 1 < l <= m:
        raise InvalidInputError(f"need 1 < l <= M, got l={l}, M={m}")
    return np.lib.stride_tricks.sliding_window_view(y_frame, l).T.copy()


def backward_extend(s_block: np.ndarray) -> np.ndarray:
    """Append the flipped, conjugated copy: [S | K conj(S)], where K
    reverses the row order."""
    s_block = np.asarray(s_block)
    return np.hstack([s_block, np.conj(s_block)[::-1, :]])


def build_data_matrix(signal, l: int) -> SnapshotMatrix:
    """Assemble the forward-backward data matrix from all J frames.

    ``signal`` may be a ReceivedSignal or a bare (M, J) complex array.
    """
    y = np.asarray(getattr(signal, "y", signal))
    if y.ndim != 2:
        raise InvalidInputError(f"expected an (M, J) matrix, got shape {y.shape}")
    m, j = y.shape
    if not 1 < l < m:
        raise InvalidInputError(f"need 1 < l < M, got l={l}, M={m}")
    blocks = [backward_extend(frame_snapshots(y[:, col], l)) for col in range(j)]
    return SnapshotMatrix(np.hstack(blocks), l, j, m)
