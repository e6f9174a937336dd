"""Compensated (Neumaier) accumulation for real and complex arrays.

Sums are always taken in a fixed order so repeated runs are bit-identical.
Long axes are summed pairwise in fixed blocks and compensated across blocks.
"""
import numpy as np


def _two_sum(s, t):
    total = s + t
    big = np.abs(s) >= np.abs(t)
    err = np.where(big, (s - total) + t, (t - total) + s)
    return total, err


_BLOCK = 256


def _real_neumaier(terms, axis):
    terms = np.moveaxis(np.asarray(terms, dtype=float), axis, 0)
    if terms.shape[0] > 4 * _BLOCK:
        # pairwise numpy sums inside fixed blocks, compensation across blocks
        nb = -(-terms.shape[0] // _BLOCK)
        pad = nb * _BLOCK - terms.shape[0]
        if pad:
            terms = np.concatenate([terms, np.zeros((pad,) + terms.shape[1:])])
        terms = terms.reshape((nb, _BLOCK) + terms.shape[1:]).sum(axis=1)
    s = np.zeros(terms.shape[1:])
    c = np.zeros(terms.shape[1:])
    for t in terms:
        s, err = _two_sum(s, t)
        c += err
    return s + c


def ksum(terms, axis=0):
    """Compensated sum of ``terms`` along ``axis``; complex input is summed per component."""
    terms = np.asarray(terms)
    if np.iscomplexobj(terms):
        return _real_neumaier(terms.real, axis) + 1j * _real_neumaier(terms.imag, axis)
    return _real_neumaier(terms, axis)


class Accumulator:
    """Running compensated sum, for loops where the number of terms is not known up front."""

    def __init__(self, shape=()):
        self._s = np.zeros(shape, dtype=complex)
        self._c_re = np.zeros(shape)
        self._c_im = np.zeros(shape)

    def add(self, t):
        t = np.asarray(t, dtype=complex)
        s_re, e_re = _two_sum(self._s.real, t.real)
        s_im, e_im = _two_sum(self._s.imag, t.imag)
        self._s = s_re + 1j * s_im
        self._c_re = self._c_re + e_re
        self._c_im = self._c_im + e_im

    @property
    def value(self):
        return (self._s.real + self._c_re) + 1j * (self._s.imag + self._c_im)
