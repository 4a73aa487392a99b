"""Hypothesis front end for the seeded property checks."""
import pytest
from hypothesis import given, settings, strategies as st

from properties import PROPERTIES


@pytest.mark.parametrize("name", sorted(PROPERTIES))
@settings(max_examples=100)
@given(seed=st.integers(0, 2**32 - 1))
def test_property(name, seed):
    PROPERTIES[name](seed)
