"""Vectorised one-step lookahead shared by best response, MVI and J.

For a value vector ``V`` of one player, the three *match values* at an
interior state are the expected continuation after a round between each pair:

    M12 = p1 V(P1 wins) + (1-p1) V(P2 wins)
    M23 = p2 V(P2 wins) + (1-p2) V(P3 wins)
    M31 = p3 V(P3 wins) + (1-p3) V(P1 wins)

Player n's pick only moves weight between two of them: P1 chooses between
M12 (x1=1) and M31 (x1=0), P2 between M23 and M12, P3 between M31 and M23.

``gamma`` scales every nonterminal continuation; ``gamma=1`` is the original
game and ``gamma<1`` the discounted one (terminal rows give the indicator in
both, because the extra absorbing state carries value 0).
"""
from __future__ import annotations

import numpy as np

from .game import GameParams, StateSpace, pair_weights

TIE_TOL = 1e-12

# (match picked when x_n = 1, match picked when x_n = 0), as columns of M
CHOICES = ((0, 2), (1, 0), (2, 1))


class Lookahead:
    def __init__(self, params: GameParams, space: StateSpace, gamma: float = 1.0):
        self.params = params
        self.space = space
        self.gamma = float(gamma)
        self.p = np.array(params.p)
        self.pb = self.p[space.boundary_pair]

    def indicator(self, n: int) -> np.ndarray:
        b = np.zeros(len(self.space))
        b[n - 1] = 1.0
        return b

    def match_values(self, V: np.ndarray) -> np.ndarray:
        """``(..., n_interior, 3)`` array of M12, M23, M31."""
        nxt = V[..., self.space.moves]          # (..., n_int, 6)
        return self.p * nxt[..., 0::2] + (1 - self.p) * nxt[..., 1::2]

    def choice_values(self, M: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
        a1, a0 = CHOICES[n - 1]
        return M[..., a1], M[..., a0]

    def interior_value(self, M: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.gamma * np.sum(pair_weights(x) * M, axis=-1)

    def apply(self, V: np.ndarray, x: np.ndarray, n: int) -> np.ndarray:
        """One application of the payoff operator ``P~ V + b`` for player n."""
        out = np.zeros_like(V)
        out[..., n - 1] = 1.0
        nb = self.space.boundary_next
        out[..., self.space.boundary] = self.gamma * (
            self.pb * V[..., nb[:, 0]] + (1 - self.pb) * V[..., nb[:, 1]]
        )
        out[..., self.space.interior] = self.interior_value(self.match_values(V), x)
        return out

    def greedy(self, M: np.ndarray, n: int, incumbent: np.ndarray | None = None) -> np.ndarray:
        """Best pure pick of player n per interior state.

        Near-ties (within ``TIE_TOL``) keep a deterministic incumbent choice;
        otherwise ties go to 1.
        """
        a1, a0 = self.choice_values(M, n)
        pick = (a1 >= a0).astype(float)
        if incumbent is not None:
            tie = np.abs(a1 - a0) <= TIE_TOL
            keep = tie & ((incumbent == 0) | (incumbent == 1))
            pick = np.where(keep, incumbent, np.where(tie, 1.0, pick))
        return pick

    def optimal_apply(self, V: np.ndarray, x: np.ndarray, n: int) -> np.ndarray:
        """``F_n(V | x)``: the payoff operator with player n's pick maximised."""
        out = self.apply(V, x, n)
        M = self.match_values(V)
        a1, a0 = self.choice_values(M, n)
        # x_n carries 1/3 of the round's weight between its two matches
        xn = x[..., n - 1]
        own = np.maximum(a1, a0) - (xn * a1 + (1 - xn) * a0)
        out[..., self.space.interior] += self.gamma * own / 3.0
        return out

    def evaluate(self, x: np.ndarray, n: int) -> np.ndarray:
        """Exact payoff of profile ``x`` for player n (batched over leading axes)."""
        A, B = self.transient_system(x)
        sol = np.linalg.solve(A, B[..., n - 1 : n])[..., 0]
        V = np.zeros(x.shape[:-2] + (len(self.space),))
        V[..., n - 1] = 1.0
        V[..., 3:] = sol
        return V

    def evaluate_all(self, x: np.ndarray) -> np.ndarray:
        """Exact payoffs of all three players, shape ``(..., 3, N)``."""
        A, B = self.transient_system(x)
        sol = np.linalg.solve(A, B)                      # (..., T, 3)
        V = np.zeros(x.shape[:-2] + (3, len(self.space)))
        V[..., [0, 1, 2], [0, 1, 2]] = 1.0
        V[..., 3:] = np.swapaxes(sol, -1, -2)
        return V

    def transient_system(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(I - gamma U, gamma W)`` for profile(s) ``x`` of shape ``(..., n_int, 3)``."""
        sp = self.space
        N = len(sp)
        T = N - 3
        lead = x.shape[:-2]
        P = np.zeros(lead + (T, N))
        bi = sp.boundary - 3
        nb = sp.boundary_next
        P[..., bi, nb[:, 0]] += self.pb
        P[..., bi, nb[:, 1]] += 1 - self.pb
        w = pair_weights(x)                              # (..., n_int, 3)
        ii = sp.interior - 3
        for c in range(6):
            pw = self.p[c // 2] if c % 2 == 0 else 1 - self.p[c // 2]
            P[..., ii, sp.moves[:, c]] += w[..., c // 2] * pw
        P *= self.gamma
        A = np.eye(T) - P[..., 3:]
        return A, P[..., :3]
