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


''' Family of exceptions for package API. '''


from . import __


class Omniexception( __.immut.exceptions.Omniexception ):
    ''' Base for all exceptions raised by package API. '''


class Omnierror( Omniexception, Exception ):
    ''' Base for error exceptions with self-rendering capability. '''

    exit_code: __.typx.ClassVar[ int ] = 4
    title: __.typx.ClassVar[ str ] = 'Error'
    suggestion: __.typx.ClassVar[ str ] = ''

    def render_as_json( self ) -> __.immut.Dictionary[ str, __.typx.Any ]:
        ''' Renders exception as JSON-compatible dictionary. '''
        return __.immut.Dictionary[ str, __.typx.Any ](
            type = _snake_case( type( self ).__name__ ),
            title = self.title,
            message = str( self ),
            suggestion = self.suggestion or None,
        )

    def render_as_markdown(
        self, /, *,
        reveal_internals: __.typx.Annotated[
            bool,
            __.ddoc.Doc( '''
                Controls whether implementation-specific details (exception
                class, exit code) are included.
            ''' ),
        ] = True,
    ) -> tuple[ str, ... ]:
        ''' Renders exception as Markdown lines for display. '''
        lines = [ f"## Error: {self.title}" ]
        lines.append( f"**Message:** {self}" )
        if self.suggestion:
            lines.append( f"**Suggestion:** {self.suggestion}" )
        if reveal_internals:
            lines.append( f"**Error Type:** {type( self ).__name__}" )
            lines.append( f"**Exit Code:** {self.exit_code}" )
        return tuple( lines )


class ValidationFailure( Omnierror, ValueError ):
    ''' Base for rejected inputs, data, and configuration. '''

    exit_code = 2


# Dataset ingestion and partitioning


class DatasetEmptiness( ValidationFailure ):
    ''' Dataset has no image and mask pairs. '''

    title = 'Empty Dataset'

    def __init__( self, root: __.Path | str ):
        self.root = root
        super( ).__init__( f"No images found in dataset at '{root}'." )


class DatasetInaccessibility( ValidationFailure ):
    ''' Dataset root or expected subdirectory absent or unreadable. '''

    title = 'Dataset Inaccessible'
    suggestion = (
        'Check the dataset root and that its layout matches the dataset '
        'kind.' )

    def __init__( self, root: __.Path | str, cause: str | Exception ):
        self.root = root
        super( ).__init__(
            f"Dataset at '{root}' is inaccessible. Cause: {cause}" )


class FilenameUnmapped( ValidationFailure ):
    ''' Image filename absent from sequence map. '''

    title = 'Unmapped Filename'
    suggestion = 'Supply a sequence map which covers every dataset image.'

    def __init__( self, filename: str ):
        self.filename = filename
        super( ).__init__( f"No sequence assigned to '{filename}'." )


class ManifestInvalidity( ValidationFailure ):
    ''' Partition manifest malformed or inconsistent. '''

    title = 'Invalid Partition Manifest'

    def __init__( self, source: __.Path | str, cause: str | Exception ):
        self.source = source
        super( ).__init__(
            f"Partition manifest at '{source}' is invalid. Cause: {cause}" )


class MaskAbsence( ValidationFailure ):
    ''' Image has no mask with matching stem. '''

    title = 'Missing Mask'

    def __init__( self, filename: str ):
        self.filename = filename
        super( ).__init__( f"No mask with stem matching '{filename}'." )


class RatiosInvalidity( ValidationFailure ):
    ''' Partition ratios malformed or not summing to 100. '''

    title = 'Invalid Partition Ratios'
    suggestion = 'Provide three non-negative percentages summing to 100.'

    def __init__( self, ratios: __.cabc.Sequence[ float ] | str ):
        self.ratios = (
            ratios if isinstance( ratios, str ) else tuple( ratios ) )
        super( ).__init__(
            f"Ratios {self.ratios!r} are not three percentages "
            "summing to 100." )


class SequenceIdUnknown( ValidationFailure ):
    ''' Requested sequence identifier absent from sequence map. '''

    title = 'Unknown Sequence'

    def __init__( self, sequence_id: int ):
        self.sequence_id = sequence_id
        super( ).__init__( f"Sequence {sequence_id} is not in sequence map." )


class SequenceMapInvalidity( ValidationFailure ):
    ''' Sequence map file malformed. '''

    title = 'Invalid Sequence Map'
    suggestion = (
        "Use a UTF-8 CSV with header 'filename,sequence_id' and one row "
        "per image." )

    def __init__( self, source: __.Path | str, cause: str | Exception ):
        self.source = source
        super( ).__init__(
            f"Sequence map at '{source}' is invalid. Cause: {cause}" )


class SequenceSetsOverlap( ValidationFailure ):
    ''' Validation and test sequence sets share members. '''

    title = 'Overlapping Sequence Sets'

    def __init__( self, shared: __.cabc.Iterable[ int ] ):
        self.shared = tuple( sorted( shared ) )
        super( ).__init__(
            f"Sequences {list( self.shared )} are in both validation "
            "and test sets." )


# Tensors and architecture


class ShapeMismatch( ValidationFailure ):
    ''' Paired tensors have incompatible shapes. '''

    title = 'Shape Mismatch'

    def __init__(
        self,
        expected: __.cabc.Sequence[ int ],
        actual: __.cabc.Sequence[ int ],
    ):
        self.expected = tuple( expected )
        self.actual = tuple( actual )
        super( ).__init__(
            f"Expected shape {self.expected}, got {self.actual}." )


class DimensionZero( ValidationFailure ):
    ''' Tensor or target size has a zero extent. '''

    title = 'Zero Dimension'

    def __init__( self, size: __.cabc.Sequence[ int ] ):
        self.size = tuple( size )
        super( ).__init__( f"Size {self.size} has a zero extent." )


class TargetNonbinarity( ValidationFailure ):
    ''' Segmentation target holds values other than 0 and 1. '''

    title = 'Non-Binary Target'

    def __init__( self, values: __.cabc.Sequence[ float ] ):
        self.values = tuple( values )
        super( ).__init__(
            f"Target holds non-binary values, e.g. {self.values[ :4 ]}." )


class ModelConfigurationInvalidity( ValidationFailure ):
    ''' Architectural hyperparameters violate an invariant. '''

    title = 'Invalid Model Configuration'

    def __init__( self, component: str, cause: str ):
        self.component = component
        super( ).__init__( f"{component}: {cause}" )


class InputIndivisibility( ValidationFailure ):
    ''' Input spatial extent not divisible by required factor. '''

    title = 'Indivisible Input'

    def __init__( self, size: __.cabc.Sequence[ int ], factor: int ):
        self.size = tuple( size )
        self.factor = factor
        super( ).__init__(
            f"Spatial size {self.size} not divisible by {factor}." )


class FeatureMapIndivisibility( ValidationFailure ):
    ''' Feature map not divisible into attention windows. '''

    title = 'Indivisible Feature Map'

    def __init__( self, size: __.cabc.Sequence[ int ], window: int ):
        self.size = tuple( size )
        self.window = window
        super( ).__init__(
            f"Feature map {self.size} not divisible by window {window}." )


class HeadDivisibility( ValidationFailure ):
    ''' Channel count not divisible by number of attention heads. '''

    title = 'Head Divisibility'

    def __init__( self, channels: int, heads: int ):
        self.channels = channels
        self.heads = heads
        super( ).__init__(
            f"{channels} channels not divisible by {heads} heads." )


class DimensionsOddity( ValidationFailure ):
    ''' Patch merging requires even spatial extents. '''

    title = 'Odd Dimensions'

    def __init__( self, size: __.cabc.Sequence[ int ] ):
        self.size = tuple( size )
        super( ).__init__( f"Spatial size {self.size} is not even." )


class ChannelDeficiency( ValidationFailure ):
    ''' Channel count smaller than squeeze reduction ratio. '''

    title = 'Channel Count Too Small'

    def __init__( self, channels: int, reduction: int ):
        self.channels = channels
        self.reduction = reduction
        super( ).__init__(
            f"{channels} channels cannot be reduced by ratio {reduction}." )


class ChannelMismatch( ValidationFailure ):
    ''' Input channel count differs from block parameters. '''

    title = 'Channel Mismatch'

    def __init__( self, expected: int, actual: int ):
        self.expected = expected
        self.actual = actual
        super( ).__init__( f"Expected {expected} channels, got {actual}." )


class SkipIncompatibility( ValidationFailure ):
    ''' Decoder skip connection has incompatible spatial extent. '''

    title = 'Incompatible Skip'

    def __init__(
        self,
        previous: __.cabc.Sequence[ int ],
        skip: __.cabc.Sequence[ int ],
    ):
        self.previous = tuple( previous )
        self.skip = tuple( skip )
        super( ).__init__(
            f"Skip of size {self.skip} incompatible with previous decoder "
            f"output of size {self.previous}." )


class ConfigurationMismatch( ValidationFailure ):
    ''' Input inconsistent with model configuration. '''

    title = 'Configuration Mismatch'

    def __init__( self, cause: str ):
        super( ).__init__( cause )


# Weights archive


class ArchiveCorruption( ValidationFailure ):
    ''' Weights archive unreadable or structurally damaged. '''

    title = 'Corrupt Archive'

    def __init__( self, source: __.Path | str, cause: str | Exception ):
        self.source = source
        super( ).__init__(
            f"Weights archive at '{source}' is corrupt. Cause: {cause}" )


class TensorAbsence( ValidationFailure ):
    ''' Expected tensor absent from weights archive. '''

    title = 'Missing Tensor'

    def __init__( self, name: str ):
        self.name = name
        super( ).__init__( f"Tensor '{name}' absent from archive." )


class TensorShapeMismatch( ValidationFailure ):
    ''' Archived tensor shape differs from model expectation. '''

    title = 'Tensor Shape Mismatch'

    def __init__(
        self,
        name: str,
        expected: __.cabc.Sequence[ int ],
        actual: __.cabc.Sequence[ int ],
    ):
        self.name = name
        self.expected = tuple( expected )
        self.actual = tuple( actual )
        super( ).__init__(
            f"Tensor '{name}' has shape {self.actual}, "
            f"expected {self.expected}." )


# Evaluation and training


class MetricsEmptiness( ValidationFailure ):
    ''' No per-image metrics to aggregate. '''

    title = 'Empty Metrics'

    def __init__( self ):
        super( ).__init__( "Cannot aggregate an empty list of metrics." )


class PartitionEmptiness( ValidationFailure ):
    ''' Required partition or split has no members. '''

    title = 'Empty Partition'

    def __init__( self, partition: str ):
        self.partition = partition
        super( ).__init__( f"Partition '{partition}' is empty." )


class LossNonfiniteness( Omnierror, ArithmeticError ):
    ''' Training loss diverged to NaN or infinity. '''

    title = 'Non-Finite Loss'
    suggestion = 'Lower the learning rate or inspect the input data.'

    def __init__( self, epoch: int, step: int, value: float ):
        self.epoch = epoch
        self.step = step
        self.value = value
        super( ).__init__(
            f"Loss became {value} at epoch {epoch}, step {step}." )


# Configuration


class ConfigurationInvalidity( ValidationFailure ):
    ''' Run configuration malformed, unknown, or out of range. '''

    title = 'Invalid Configuration'
    suggestion = 'Compare the configuration against the documented keys.'

    def __init__( self, location: str, cause: str ):
        self.location = location
        super( ).__init__( f"Configuration '{location}': {cause}" )


class ContextInvalidity( Omnierror, TypeError ):
    ''' Invalid context type provided to operation. '''


def _snake_case( name: str ) -> str:
    return ''.join(
        f"_{character.lower( )}" if character.isupper( ) and index
        else character.lower( )
        for index, character in enumerate( name ) )
