#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

# All tests in the test suite.
__all__ = ( "model_tests", "environment_tests", "instancefile_tests",
            "matcomp_tests", "kmeans_tests", "clusterelim_tests",
            "detelim_tests", "baselines_tests", "config_tests",
            "harness_tests", "svgplot_tests", "cli_tests",
            "acceptance_tests" )
