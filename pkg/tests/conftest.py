import numpy as np
import pytest

import tyrefield as tf


@pytest.fixture
def table1_law():
    """Stribeck friction law of the scalar friction studies."""
    return tf.FrictionLaw(mu_d=0.8, mu_s=1.2, v_s=0.6, sigma_3=0.0018, eps=0.0)


@pytest.fixture
def scalar_env():
    """Scalar bristle environment: sigma_0 = 180 1/m, rolling 20 m/s over 0.1 m."""
    return tf.BristleEnv(sigma_0=180.0, V=200.0, L=0.1, F_z=3000.0, chi_1=1, chi_2=0)


def table2_vehicle(variant=tf.RIGID, sigma_1=0.0, sigma_2=0.0, v_x=20.0, eps=1e-6,
                   w=2.5e6, pressure=None, chi_1=0, chi_2=0, chi_3=0, law=None):
    """Simulation-study configuration: constant friction coefficient 1."""
    law = law or tf.FrictionLaw(constant_mu=1.0, eps=eps)
    pressure = pressure or tf.PressureProfile("constant")
    front = tf.AxleConfig(L=0.11, F_z=3924.0, sigma_0=163.0, sigma_1=sigma_1,
                          sigma_2=sigma_2, w=w, pressure=pressure, friction=law, l=1.0)
    rear = tf.AxleConfig(L=0.09, F_z=2453.0, sigma_0=408.0, sigma_1=sigma_1,
                         sigma_2=sigma_2, w=w, pressure=pressure, friction=law, l=-1.6)
    return tf.VehicleConfig(m=1300.0, I_z=2000.0, l1=1.0, l2=1.6, v_x=v_x,
                            chi_1=chi_1, chi_2=chi_2, chi_3=chi_3, variant=variant,
                            front=front, rear=rear)


@pytest.fixture
def rigid_cfg():
    return table2_vehicle(tf.RIGID)


@pytest.fixture
def flexible_cfg():
    return table2_vehicle(tf.FLEXIBLE)


@pytest.fixture
def rigid_model(rigid_cfg):
    return tf.assemble_model(rigid_cfg)


@pytest.fixture
def flexible_model(flexible_cfg):
    return tf.assemble_model(flexible_cfg)


def chart_base_cfg(eps=0.0):
    """Base configuration for stability charts (flexible, constant pressure)."""
    return table2_vehicle(tf.FLEXIBLE, eps=eps, v_x=0.3)


def deg(x):
    return np.deg2rad(x)
