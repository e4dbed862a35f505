#
# hottlab: a simulation lab for online low-rank matrix completion
# bandits.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#
