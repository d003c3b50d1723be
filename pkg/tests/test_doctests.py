import doctest

import pytest

from fracl1 import l1_scheme, specfun


@pytest.mark.parametrize("module", [l1_scheme, specfun], ids=lambda m: m.__name__)
def test_module_doctests(module):
    result = doctest.testmod(module, optionflags=doctest.ELLIPSIS)
    assert result.attempted > 0
    assert result.failed == 0
