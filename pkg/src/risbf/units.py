"""dB / linear conversions.

All internal computations use linear power units (milliwatts); dB and dBm
appear only at configuration and reporting boundaries.
"""

import numpy as np


def db_to_linear(db):
    """Convert a dB ratio to a linear ratio."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    """Convert a linear ratio to dB."""
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def dbm_to_mw(dbm):
    """Convert dBm to milliwatts."""
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    """Convert milliwatts to dBm."""
    return 10.0 * np.log10(np.asarray(mw, dtype=float))
