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


''' Owned pseudo-random generator for reproducible partitions and draws.

    All shuffles and seeds in this package come from SplitMix64, stated
    here bit-for-bit so that partitions can be reproduced in any language:

    * state advances by the constant ``0x9E3779B97F4A7C15`` (mod 2**64);
    * output is the advanced state passed through the finalizer
      ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
      z *= 0x94D049BB133111EB; z ^= z >> 31`` (all mod 2**64);
    * bounded draws use rejection sampling: with
      ``threshold = (2**64 - bound) % bound``, outputs below ``threshold``
      are discarded, otherwise ``output % bound`` is returned;
    * shuffles are Fisher-Yates, for ``i`` from ``n - 1`` down to ``1``,
      swapping position ``i`` with a bounded draw ``j`` in ``[0, i]``.
'''


from . import __


_GAMMA = 0x9E3779B97F4A7C15
_MASK = ( 1 << 64 ) - 1

_Item = __.typx.TypeVar( '_Item' )


def mix( value: int ) -> int:
    ''' Applies SplitMix64 finalizer to 64-bit value. '''
    z = value & _MASK
    z = ( ( z ^ ( z >> 30 ) ) * 0xBF58476D1CE4E5B9 ) & _MASK
    z = ( ( z ^ ( z >> 27 ) ) * 0x94D049BB133111EB ) & _MASK
    return z ^ ( z >> 31 )


def derive_key( seed: int, *parts: int ) -> int:
    ''' Derives 64-bit key from seed and ordered key parts.

        Each part is folded in as ``key = mix( ( key ^ part ) + gamma )``,
        starting from ``key = mix( seed + gamma )``.
    '''
    key = mix( ( seed & _MASK ) + _GAMMA )
    for part in parts:
        key = mix( ( ( key ^ ( part & _MASK ) ) + _GAMMA ) & _MASK )
    return key


class SplitMix64:
    ''' SplitMix64 generator with unbiased bounded draws. '''

    def __init__( self, seed: int ) -> None:
        self._state = seed & _MASK

    def next( self ) -> int:
        ''' Advances generator and returns 64-bit output. '''
        self._state = ( self._state + _GAMMA ) & _MASK
        return mix( self._state )

    def below( self, bound: int ) -> int:
        ''' Returns uniform integer in ``[0, bound)``. '''
        if bound < 1: raise ValueError( f"Bound must be positive: {bound}" )
        threshold = ( ( 1 << 64 ) - bound ) % bound
        while True:
            output = self.next( )
            if output >= threshold: return output % bound

    def shuffle( self, items: __.cabc.Iterable[ _Item ] ) -> list[ _Item ]:
        ''' Returns Fisher-Yates permutation of items. '''
        result = list( items )
        for i in range( len( result ) - 1, 0, -1 ):
            j = self.below( i + 1 )
            result[ i ], result[ j ] = result[ j ], result[ i ]
        return result


def produce_permutation(
    seed: int, *parts: int, count: int
) -> list[ int ]:
    ''' Permutation of ``range( count )`` keyed by seed and parts. '''
    return SplitMix64( derive_key( seed, *parts ) ).shuffle( range( count ) )
