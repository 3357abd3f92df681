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


''' Common enumerations and interfaces. '''


from . import __


class DisplayFormat( __.enum.Enum ):
    ''' Enumeration for CLI display formats. '''

    JSON = 'json'
    Markdown = 'markdown'


class DatasetKind( str, __.enum.Enum ):
    ''' Supported dataset directory layouts. '''

    KvasirSEG = 'kvasir-seg'
    CVCClinicDB = 'cvc-clinicdb'
    Generic = 'generic'


class PartitionMethod( str, __.enum.Enum ):
    ''' Provenance of a train/validation/test partition. '''

    SortedFixed = 'sorted-fixed'
    RandomSeeded = 'random-seeded'
    SequenceGrouped = 'sequence-grouped'
    Full = 'full'


class Partition( str, __.enum.Enum ):
    ''' Named members of a partition, in canonical order. '''

    Train = 'train'
    Validation = 'val'
    Test = 'test'


class SplitMethod( str, __.enum.Enum ):
    ''' Partitioning strategies selectable from the command line. '''

    Sorted = 'sorted'
    Random = 'random'
    Sequence = 'sequence'


class ModelPreset( str, __.enum.Enum ):
    ''' Named architectural configurations. '''

    Base = 'base'
    Toy = 'toy'


# Image and mask layouts, keyed by dataset kind.
dataset_layouts: __.cabc.Mapping[ DatasetKind, tuple[ str, str ] ] = (
    __.types.MappingProxyType( {
        DatasetKind.KvasirSEG: ( 'images', 'masks' ),
        DatasetKind.CVCClinicDB: ( 'Original', 'Ground Truth' ),
        DatasetKind.Generic: ( 'images', 'masks' ),
    } ) )

image_suffixes = frozenset( (
    '.bmp', '.jpeg', '.jpg', '.png', '.tif', '.tiff' ) )
