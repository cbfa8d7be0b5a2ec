"""Dynamics of every task, following the classic definitions of each problem.

Car-On-Hill follows Ernst et al. (2005); Cart-Pole, Acrobot and Mountain-Car
follow the OpenAI-Gym ``CartPole-v0``, ``Acrobot-v1`` and ``MountainCar-v0``
definitions; the discrete Inverted-Pendulum follows Lagoudakis & Parr (2003).
Continuous-time systems are integrated with fixed-step RK4 over the control
interval.
"""
from __future__ import annotations

import math

import numpy as np

from .base import Dynamics, register, rk4, rk4_tuple

# ---------------------------------------------------------------- constants
CAR_ON_HILL = dict(g=9.81, max_pos=1.0, max_vel=3.0, dt=0.1, substeps=10, start=(-0.5, 0.0))
CART_POLE = dict(g=9.8, m_cart=1.0, m_pole=0.1, half_length=0.5, force=10.0, dt=0.02,
                 x_limit=2.4, theta_limit=12 * 2 * math.pi / 360, reset_scale=0.05)
ACROBOT = dict(g=9.8, l1=1.0, m1=1.0, m2=1.0, lc1=0.5, lc2=0.5, i1=1.0, i2=1.0, dt=0.2,
               max_vel1=4 * math.pi, max_vel2=9 * math.pi, torques=(-1.0, 0.0, 1.0),
               reset_scale=0.1)
MOUNTAIN_CAR = dict(min_pos=-1.2, max_pos=0.6, max_speed=0.07, goal_pos=0.5,
                    force=0.001, gravity=0.0025, throttle=(-1.0, 0.0, 1.0))
INVERTED_PENDULUM = dict(g=9.8, m=2.0, M=8.0, l=0.5, dt=0.1, forces=(-50.0, 0.0, 50.0),
                         noise=10.0, reset_angle=math.pi / 8)
TORQUE_PENDULUM = dict(g=10.0, l=1.0, max_torque=2.0, max_speed=8.0, dt=0.05, substeps=5,
                       masses=(0.8, 1.0, 1.2))


def angle_normalize(x):
    return ((x + np.pi) % (2 * np.pi)) - np.pi


# ---------------------------------------------------------------- Car-On-Hill

def _hill_slopes(p):
    if p < 0.0:
        return 2.0 * p + 1.0, 2.0
    q = 1.0 + 5.0 * p * p
    return 1.0 / q ** 1.5, -15.0 * p / q ** 2.5


@register("car_on_hill")
class CarOnHill(Dynamics):
    box = ((-1.0, 1.0), (-3.0, 3.0))

    def reset(self, spec, rng):
        return np.array(CAR_ON_HILL["start"], dtype=np.float64)

    def advance(self, spec, state, u, rng):
        m, g = spec.params.get("mass", 1.0), CAR_ON_HILL["g"]

        def deriv(y):
            p, v = y
            d1, d2 = _hill_slopes(p)
            return v, (u - g * m * d1 - v * v * m * d1 * d2) / (m * (1.0 + d1 * d1))

        p, v = rk4_tuple(deriv, (float(state[0]), float(state[1])),
                         CAR_ON_HILL["dt"], CAR_ON_HILL["substeps"])
        r, absorbing = _coh_reward(p, v)
        return np.array([p, v]), r, absorbing

    def advance_batch(self, spec, states, u):
        m, g = spec.params.get("mass", 1.0), CAR_ON_HILL["g"]

        def deriv(y):
            p, v = y[:, 0], y[:, 1]
            neg = p < 0.0
            q = 1.0 + 5.0 * p * p
            d1 = np.where(neg, 2.0 * p + 1.0, q ** -1.5)
            d2 = np.where(neg, 2.0, -15.0 * p * q ** -2.5)
            dv = (u - g * m * d1 - v * v * m * d1 * d2) / (m * (1.0 + d1 * d1))
            return np.stack([v, dv], axis=1)

        nxt = rk4(deriv, np.asarray(states, dtype=np.float64), CAR_ON_HILL["dt"],
                  CAR_ON_HILL["substeps"])
        p, v = nxt[:, 0], nxt[:, 1]
        lose = (p < -1.0) | (np.abs(v) > 3.0)
        win = ~lose & (p > 1.0)
        r = np.where(lose, -1.0, np.where(win, 1.0, 0.0))
        return nxt, r, lose | win


def _coh_reward(p, v):
    if p < -CAR_ON_HILL["max_pos"] or abs(v) > CAR_ON_HILL["max_vel"]:
        return -1.0, True
    if p > CAR_ON_HILL["max_pos"]:
        return 1.0, True
    return 0.0, False


# ---------------------------------------------------------------- Cart-Pole

@register("cart_pole")
class CartPole(Dynamics):
    def reset(self, spec, rng):
        k = CART_POLE["reset_scale"]
        return rng.uniform(-k, k, size=4)

    def advance(self, spec, state, force, rng):
        c = CART_POLE
        total = c["m_cart"] + c["m_pole"]
        pml = c["m_pole"] * c["half_length"]

        def deriv(y):
            _, x_dot, th, th_dot = y
            cos, sin = math.cos(th), math.sin(th)
            tmp = (force + pml * th_dot * th_dot * sin) / total
            th_acc = (c["g"] * sin - cos * tmp) / (
                c["half_length"] * (4.0 / 3.0 - c["m_pole"] * cos * cos / total))
            x_acc = tmp - pml * th_acc * cos / total
            return x_dot, x_acc, th_dot, th_acc

        y = rk4_tuple(deriv, tuple(float(v) for v in state), c["dt"])
        failed = abs(y[0]) > c["x_limit"] or abs(y[2]) > c["theta_limit"]
        return np.array(y), 1.0, failed


# ---------------------------------------------------------------- Acrobot

@register("acrobot")
class Acrobot(Dynamics):
    deterministic = True

    def reset(self, spec, rng):
        k = ACROBOT["reset_scale"]
        return rng.uniform(-k, k, size=4)

    def observe(self, spec, state):
        t1, t2, d1, d2 = state
        return np.array([math.cos(t1), math.sin(t1), math.cos(t2), math.sin(t2), d1, d2])

    def advance(self, spec, state, torque, rng):
        c = ACROBOT
        m1, m2, l1, lc1, lc2, i1, i2, g = (c[k] for k in ("m1", "m2", "l1", "lc1", "lc2", "i1", "i2", "g"))

        def deriv(y):
            t1, t2, dt1, dt2 = y
            d1 = m1 * lc1 ** 2 + m2 * (l1 ** 2 + lc2 ** 2 + 2 * l1 * lc2 * math.cos(t2)) + i1 + i2
            d2 = m2 * (lc2 ** 2 + l1 * lc2 * math.cos(t2)) + i2
            phi2 = m2 * lc2 * g * math.cos(t1 + t2 - math.pi / 2.0)
            phi1 = (-m2 * l1 * lc2 * dt2 ** 2 * math.sin(t2)
                    - 2 * m2 * l1 * lc2 * dt2 * dt1 * math.sin(t2)
                    + (m1 * lc1 + m2 * l1) * g * math.cos(t1 - math.pi / 2.0) + phi2)
            ddt2 = ((torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dt1 ** 2 * math.sin(t2) - phi2)
                    / (m2 * lc2 ** 2 + i2 - d2 ** 2 / d1))
            ddt1 = -(d2 * ddt2 + phi1) / d1
            return dt1, dt2, ddt1, ddt2

        t1, t2, dt1, dt2 = rk4_tuple(deriv, tuple(float(v) for v in state), c["dt"])
        t1 = float(angle_normalize(t1))
        t2 = float(angle_normalize(t2))
        dt1 = min(max(dt1, -c["max_vel1"]), c["max_vel1"])
        dt2 = min(max(dt2, -c["max_vel2"]), c["max_vel2"])
        done = -math.cos(t1) - math.cos(t2 + t1) > 1.0
        return np.array([t1, t2, dt1, dt2]), (0.0 if done else -1.0), done


# ---------------------------------------------------------------- Mountain-Car

@register("mountain_car")
class MountainCar(Dynamics):
    box = ((MOUNTAIN_CAR["min_pos"], MOUNTAIN_CAR["max_pos"]),
           (-MOUNTAIN_CAR["max_speed"], MOUNTAIN_CAR["max_speed"]))

    def reset(self, spec, rng):
        return np.array([rng.uniform(-0.6, -0.4), 0.0])

    def advance(self, spec, state, throttle, rng):
        c = MOUNTAIN_CAR
        pos, vel = float(state[0]), float(state[1])
        vel += throttle * c["force"] + math.cos(3 * pos) * (-c["gravity"])
        vel = min(max(vel, -c["max_speed"]), c["max_speed"])
        pos += vel
        pos = min(max(pos, c["min_pos"]), c["max_pos"])
        if pos == c["min_pos"] and vel < 0:
            vel = 0.0
        done = pos >= c["goal_pos"] and vel >= 0
        return np.array([pos, vel]), -1.0, done

    def advance_batch(self, spec, states, throttle):
        c = MOUNTAIN_CAR
        pos, vel = states[:, 0].copy(), states[:, 1].copy()
        vel = np.clip(vel + throttle * c["force"] - np.cos(3 * pos) * c["gravity"],
                      -c["max_speed"], c["max_speed"])
        pos = np.clip(pos + vel, c["min_pos"], c["max_pos"])
        vel = np.where((pos == c["min_pos"]) & (vel < 0), 0.0, vel)
        done = (pos >= c["goal_pos"]) & (vel >= 0)
        return np.stack([pos, vel], axis=1), np.full(len(pos), -1.0), done


# ---------------------------------------------------------------- Inverted-Pendulum (LSPI)

@register("inverted_pendulum")
class InvertedPendulum(Dynamics):
    deterministic = False  # uniform force noise

    def reset(self, spec, rng):
        k = INVERTED_PENDULUM["reset_angle"]
        return np.array([rng.uniform(-k, k), 0.0])

    def advance(self, spec, state, force, rng):
        c = INVERTED_PENDULUM
        u = force + rng.uniform(-c["noise"], c["noise"])
        alpha = 1.0 / (c["m"] + c["M"])
        m, l, g = c["m"], c["l"], c["g"]

        def deriv(y):
            th, om = y
            s, co = math.sin(th), math.cos(th)
            acc = ((g * s - alpha * m * l * om * om * math.sin(2 * th) / 2.0 - alpha * co * u)
                   / (4.0 * l / 3.0 - alpha * m * l * co * co))
            return om, acc

        th, om = rk4_tuple(deriv, (float(state[0]), float(state[1])), c["dt"])
        fallen = abs(th) > math.pi / 2
        return np.array([th, om]), (-1.0 if fallen else 0.0), fallen


# ---------------------------------------------------------------- torque pendulum family

def pendulum_energy(mass, theta, theta_dot):
    """Mechanical energy of the rod pendulum (angle 0 is upright)."""
    c = TORQUE_PENDULUM
    inertia = mass * c["l"] ** 2 / 3.0
    return 0.5 * inertia * theta_dot ** 2 + mass * c["g"] * c["l"] / 2.0 * np.cos(theta)


@register("torque_pendulum")
class TorquePendulum(Dynamics):
    """Swing-up pendulum with bounded torque, continuous actions."""

    def reset(self, spec, rng):
        return np.array([rng.uniform(-np.pi, np.pi), rng.uniform(-1.0, 1.0)])

    def observe(self, spec, state):
        th, om = state
        return np.array([math.cos(th), math.sin(th), om])

    def integrate(self, spec, state, torque):
        c = TORQUE_PENDULUM
        m, l, g = spec.params.get("mass", 1.0), c["l"], c["g"]

        def deriv(y):
            th, om = y
            return om, 3.0 * g / (2.0 * l) * math.sin(th) + 3.0 / (m * l * l) * torque

        return rk4_tuple(deriv, (float(state[0]), float(state[1])), c["dt"], c["substeps"])

    def advance(self, spec, state, torque, rng):
        c = TORQUE_PENDULUM
        u = float(np.clip(np.asarray(torque).reshape(-1)[0], -c["max_torque"], c["max_torque"]))
        th, om = float(state[0]), float(state[1])
        cost = angle_normalize(th) ** 2 + 0.1 * om ** 2 + 0.001 * u ** 2
        th, om = self.integrate(spec, state, u)
        om = min(max(om, -c["max_speed"]), c["max_speed"])
        return np.array([th, om]), -float(cost), False


# ---------------------------------------------------------------- two-state chain

@register("chain")
class Chain(Dynamics):
    """Two states {0, 1}; action 0 stays, action 1 switches.

    Staying in state 1 pays 1, everything else pays 0, so the optimal values
    have a closed form. Used to check the value-iteration machinery.
    """
    box = ((0.0, 1.0),)

    def reset(self, spec, rng):
        return np.array([0.0])

    def advance(self, spec, state, a, rng):
        s = int(round(float(state[0])))
        r = 1.0 if (s == 1 and a == 0.0) else 0.0
        nxt = s if a == 0.0 else 1 - s
        return np.array([float(nxt)]), r, False

    def advance_batch(self, spec, states, a):
        s = np.rint(states[:, 0])
        r = np.where((s == 1) & (a == 0.0), 1.0, 0.0)
        nxt = s if a == 0.0 else 1.0 - s
        return nxt[:, None], r, np.zeros(len(s), dtype=bool)
