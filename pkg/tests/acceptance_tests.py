#
# Unit tests for the cheaper acceptance criteria.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#
from unittest import TestCase

from hottlab.acceptance import AcceptanceSuite

class AcceptanceTests(TestCase):
  def testCounterExampleFixture(self):
    passed, detail = AcceptanceSuite().criterion_3()
    assert passed, detail
    assert "k in []" in detail

  def testCompletionSanity(self):
    passed, detail = AcceptanceSuite().criterion_4()
    assert passed, detail
    assert "median error ratio" in detail
