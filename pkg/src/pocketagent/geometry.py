"""Screen geometry primitives. The virtual screen is a fixed 1080x1920 px."""

from __future__ import annotations

from dataclasses import dataclass

SCREEN_W = 1080
SCREEN_H = 1920


@dataclass(frozen=True, order=True)
class Rect:
    """Axis-aligned pixel rectangle; right/bottom are exclusive edges."""

    left: int
    top: int
    right: int
    bottom: int

    @property
    def width(self) -> int:
        return self.right - self.left

    @property
    def height(self) -> int:
        return self.bottom - self.top

    @property
    def area(self) -> int:
        return max(0, self.width) * max(0, self.height)

    @property
    def center(self) -> tuple[float, float]:
        return ((self.left + self.right) / 2.0, (self.top + self.bottom) / 2.0)

    def contains_point(self, x: float, y: float) -> bool:
        return self.left <= x < self.right and self.top <= y < self.bottom

    def contains_strictly(self, x: float, y: float) -> bool:
        return self.left < x < self.right and self.top < y < self.bottom

    def contains_rect(self, other: "Rect") -> bool:
        return (
            self.left <= other.left
            and self.top <= other.top
            and other.right <= self.right
            and other.bottom <= self.bottom
        )

    def is_degenerate(self) -> bool:
        return self.width <= 0 or self.height <= 0

    def to_list(self) -> list[int]:
        return [self.left, self.top, self.right, self.bottom]

    @classmethod
    def from_seq(cls, seq) -> "Rect":
        left, top, right, bottom = (int(v) for v in seq)
        return cls(left, top, right, bottom)


SCREEN = Rect(0, 0, SCREEN_W, SCREEN_H)
