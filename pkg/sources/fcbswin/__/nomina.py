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


''' Common names and type aliases. '''


from . import imports as __


ComparisonResult: __.typx.TypeAlias = bool | __.types.NotImplementedType
NominativeArguments: __.typx.TypeAlias = __.cabc.Mapping[ str, __.typx.Any ]
PositionalArguments: __.typx.TypeAlias = __.cabc.Sequence[ __.typx.Any ]

Tensor: __.typx.TypeAlias = __.torch.Tensor
TensorPair: __.typx.TypeAlias = tuple[ __.torch.Tensor, __.torch.Tensor ]
Spatial: __.typx.TypeAlias = tuple[ int, int ]


package_name = __name__.split( '.', maxsplit = 1 )[ 0 ]

determinism_variable_name = 'FCB_DETERMINISTIC'


def provide_data_location( *segments: str ) -> __.Path:
    ''' Location of redistributable package data. '''
    # Installed wheels place data under the package; source trees do not.
    package_root = __.Path( __file__ ).parent.parent
    installed = package_root.joinpath( 'data', *segments )
    if installed.exists( ): return installed
    return package_root.parent.parent.joinpath( 'data', *segments )
