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


''' Docstrings table for reuse across entities. '''


from . import imports as __


def access_doctab( name: str ) -> str:
    ''' Returns cleaned string corresponding to fragment. '''
    return __.inspect.cleandoc( fragments[ name ] )


fragments: __.cabc.Mapping[ str, str ] = __.types.MappingProxyType( {

    # Arguments

    'checkpoint argument':
    ''' Path to model weights archive written by training. ''',

    'configuration argument':
    ''' Path to JSON run configuration. Unknown keys are rejected. ''',

    'dataset kind argument':
    ''' Dataset layout: kvasir-seg, cvc-clinicdb, or generic. ''',

    'dataset root argument':
    ''' Root directory of dataset with images and masks. ''',

    'manifest argument':
    ''' Path to partition manifest (JSON). ''',

    'output argument':
    ''' Destination path for produced artifacts. ''',

    'ratios argument':
    ''' Comma-separated train, validation, and test percentages summing to
    100. ''',

    'seed argument':
    ''' Seed for the owned SplitMix64 generator. ''',

    'sequence map argument':
    ''' CSV map with header 'filename,sequence_id'. ''',

    'threshold argument':
    ''' Probability threshold for binarizing predictions. ''',

    'native resolution argument':
    ''' Compare or emit masks at native image resolution. ''',

    # Returns

    'leakage report return':
    ''' Sequences whose frames span more than one partition. ''',

    'metrics report return':
    ''' Per-image dice, IoU, precision, recall and their means. ''',

    'partition return':
    ''' Train, validation, and test filenames with provenance. ''',

} )
