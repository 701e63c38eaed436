# File: models/loop_terms.py

from dataclasses import dataclass


@dataclass(frozen=True)
class LoopTerms:
    """Centered loop-equation functional split into its pair, linear and tilt parts."""
    quad_term: float
    linear_term: float
    cross_term: float

    @property
    def total(self) -> float:
        return self.quad_term + self.linear_term + self.cross_term

    def to_dict(self) -> dict:
        return {'quad_term': self.quad_term, 'linear_term': self.linear_term,
                'cross_term': self.cross_term, 'total': self.total}
