# vim: set filetype=python fileencoding=utf-8:
# -*- coding: utf-8 -*-

#============================================================================#
#                                                                            #
#  Licensed under the Apache License, Version 2.0 (the "License");           #
#  you may not use this file except in compliance with the License.          #
#  You may obtain a copy of the License at                                   #
#                                                                            #
#      http://www.apache.org/licenses/LICENSE-2.0                            #
#                                                                            #
#  Unless required by applicable law or agreed to in writing, software       #
#  distributed under the License is distributed on an "AS IS" BASIS,         #
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.  #
#  See the License for the specific language governing permissions and       #
#  limitations under the License.                                            #
#                                                                            #
#============================================================================#


''' Owned pseudo-random generator. '''


import pytest

import fcbswin.randomness as module


def test_000_splitmix64_reference_outputs( ):
    ''' Generator matches published SplitMix64 outputs. '''
    generator = module.SplitMix64( 1234567 )
    outputs = [ generator.next( ) for _ in range( 5 ) ]
    assert outputs == [
        6457827717110365317,
        3203168211198807973,
        9817491932198370423,
        4593380528125082431,
        16408922859458223821,
    ]


def test_010_outputs_fit_64_bits( ):
    ''' Outputs never exceed 64 bits, even for oversized seeds. '''
    generator = module.SplitMix64( ( 1 << 70 ) + 5 )
    for _ in range( 100 ):
        assert 0 <= generator.next( ) < 1 << 64


def test_100_below_respects_bound( ):
    ''' Bounded draws stay within bound. '''
    generator = module.SplitMix64( 0 )
    draws = [ generator.below( 7 ) for _ in range( 500 ) ]
    assert set( draws ) == set( range( 7 ) )


def test_110_below_rejects_nonpositive_bound( ):
    ''' Bound must be positive. '''
    with pytest.raises( ValueError ):
        module.SplitMix64( 0 ).below( 0 )


def test_200_shuffle_is_permutation( ):
    ''' Shuffle preserves membership and leaves input untouched. '''
    items = list( range( 50 ) )
    shuffled = module.SplitMix64( 42 ).shuffle( items )
    assert sorted( shuffled ) == items
    assert shuffled != items
    assert items == list( range( 50 ) )


def test_210_shuffle_deterministic( ):
    ''' Same seed yields same permutation. '''
    first = module.SplitMix64( 9 ).shuffle( 'abcdefgh' )
    second = module.SplitMix64( 9 ).shuffle( 'abcdefgh' )
    assert first == second


def test_220_shuffle_trivial_inputs( ):
    ''' Empty and singleton inputs are returned unchanged. '''
    assert module.SplitMix64( 1 ).shuffle( [ ] ) == [ ]
    assert module.SplitMix64( 1 ).shuffle( [ 'x' ] ) == [ 'x' ]


def test_300_derive_key_distinguishes_parts( ):
    ''' Keys depend on seed and on order of parts. '''
    assert module.derive_key( 0, 1, 2 ) == module.derive_key( 0, 1, 2 )
    assert module.derive_key( 0, 1, 2 ) != module.derive_key( 0, 2, 1 )
    assert module.derive_key( 0, 1 ) != module.derive_key( 1, 1 )
    assert module.derive_key( 0 ) != module.derive_key( 0, 0 )


def test_310_produce_permutation( ):
    ''' Keyed permutations differ across keys. '''
    first = module.produce_permutation( 0, 1, count = 20 )
    again = module.produce_permutation( 0, 1, count = 20 )
    other = module.produce_permutation( 0, 2, count = 20 )
    assert sorted( first ) == list( range( 20 ) )
    assert first == again
    assert first != other
