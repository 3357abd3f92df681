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


''' Business logic behind command-line subcommands. '''


from . import __
from . import architecture as _architecture
from . import configuration as _configuration
from . import datakit as _datakit
from . import evaluation as _evaluation
from . import exceptions as _exceptions
from . import interfaces as _interfaces
from . import results as _results
from . import training as _training
from . import verification as _verification


_scribe = __.acquire_scribe( __name__ )


DatasetRootArgument: __.typx.TypeAlias = __.typx.Annotated[
    __.Path, __.ddoc.Fname( 'dataset root argument' ) ]
ManifestArgument: __.typx.TypeAlias = __.typx.Annotated[
    __.Path, __.ddoc.Fname( 'manifest argument' ) ]
SequenceMapArgument: __.typx.TypeAlias = __.typx.Annotated[
    __.Path, __.ddoc.Fname( 'sequence map argument' ) ]
CheckpointArgument: __.typx.TypeAlias = __.typx.Annotated[
    __.Path, __.ddoc.Fname( 'checkpoint argument' ) ]


async def split(
    dataset_root: DatasetRootArgument, /,
    kind: _interfaces.DatasetKind,
    method: _interfaces.SplitMethod,
    ratios: __.cabc.Sequence[ float ] | str = ( 80.0, 10.0, 10.0 ),
    seed: int = 0,
    sequence_map: __.Absential[ SequenceMapArgument ] = __.absent,
    val_sequences: __.cabc.Sequence[ int ] = ( ),
    test_sequences: __.cabc.Sequence[ int ] = ( ),
    output: __.Absential[ __.Path ] = __.absent,
) -> __.typx.Annotated[
    _datakit.PartitionSpec, __.ddoc.Fname( 'partition return' )
]:
    ''' Partitions dataset and optionally writes manifest.

        Ratios may be given as comma-separated text, such as ``80,10,10``.
    '''
    if isinstance( ratios, str ): ratios = _datakit.parse_ratios( ratios )
    index = _datakit.load_dataset( dataset_root, kind )
    match method:
        case _interfaces.SplitMethod.Sorted:
            spec = _datakit.sorted_fixed_partition( index, ratios )
        case _interfaces.SplitMethod.Random:
            spec = _datakit.random_partition( index, ratios, seed )
        case _interfaces.SplitMethod.Sequence:
            if __.is_absent( sequence_map ):
                raise _exceptions.ConfigurationInvalidity(
                    'sequence_map', 'required by sequence method' )
            spec = _datakit.sequence_partition(
                index, _datakit.load_sequence_map( sequence_map ),
                val_sequences, test_sequences )
    if not __.is_absent( output ):
        _datakit.save_manifest( spec, output )
        _scribe.info( f"Wrote partition manifest to '{output}'." )
    return spec


async def audit(
    manifest: ManifestArgument, sequence_map: SequenceMapArgument
) -> __.typx.Annotated[
    _datakit.LeakageReport, __.ddoc.Fname( 'leakage report return' )
]:
    ''' Audits partition manifest for sequences spanning partitions. '''
    spec = _datakit.load_manifest( manifest )
    return _datakit.audit_leakage(
        spec, _datakit.load_sequence_map( sequence_map ) )


async def train(
    configuration: _configuration.RunConfig,
    encoder_weights: __.Absential[ __.Path ] = __.absent,
) -> _results.TrainingOutcome:
    ''' Trains model on manifest partitions, checkpointing best weights. '''
    index, spec = _access_partitioned_dataset( configuration )
    model = _architecture.build_model(
        configuration.model, seed = configuration.train.seed )
    if not __.is_absent( encoder_weights ):
        _architecture.import_encoder_weights( model, encoder_weights )
    return _training.train(
        model,
        _datakit.resolve_pairs( index, spec.train ),
        _datakit.resolve_pairs( index, spec.val ),
        configuration.train,
        configuration.augment,
        configuration.output )


async def evaluate(
    configuration: _configuration.RunConfig,
    checkpoint: CheckpointArgument,
    partition: _interfaces.Partition = _interfaces.Partition.Test,
    full_dataset: bool = False,
) -> __.typx.Annotated[
    _evaluation.MetricsReport, __.ddoc.Fname( 'metrics report return' )
]:
    ''' Evaluates checkpoint and writes per-image and summary reports.

        With full dataset, every image of the dataset is evaluated and no
        manifest is needed.
    '''
    if full_dataset:
        index = _datakit.load_dataset(
            _require_dataset_root( configuration ),
            configuration.dataset_kind )
        spec = _datakit.full_partition( index )
        partition = _interfaces.Partition.Test
    else: index, spec = _access_partitioned_dataset( configuration )
    _training.configure_determinism( )
    model = _architecture.load_weights( checkpoint, configuration.model )
    report = _training.evaluate(
        model,
        _datakit.resolve_pairs( index, spec.access_partition( partition ) ),
        threshold = configuration.evaluation.threshold,
        native_resolution = configuration.evaluation.native_resolution )
    _evaluation.write_report( report, configuration.output )
    return report


async def predict(
    configuration: _configuration.RunConfig,
    checkpoint: CheckpointArgument,
    images: __.Path,
) -> _results.PredictionOutcome:
    ''' Writes binary masks for every image in directory. '''
    locations = _datakit.survey_images( images )
    _training.configure_determinism( )
    model = _architecture.load_weights( checkpoint, configuration.model )
    return _training.predict(
        model, locations, configuration.output,
        threshold = configuration.evaluation.threshold,
        native_resolution = configuration.evaluation.native_resolution )


async def gradcheck(
    names: __.Absential[ __.cabc.Sequence[ str ] ] = __.absent,
    seed: int = 0,
) -> _results.VerificationReport:
    ''' Runs finite-difference gradient suite. '''
    return _verification.run_suite( names, seed = seed )


def _access_partitioned_dataset(
    configuration: _configuration.RunConfig
) -> tuple[ _datakit.DatasetIndex, _datakit.PartitionSpec ]:
    root = _require_dataset_root( configuration )
    if configuration.manifest is None:
        raise _exceptions.ConfigurationInvalidity(
            'manifest', 'a partition manifest is required' )
    index = _datakit.load_dataset( root, configuration.dataset_kind )
    return index, _datakit.load_manifest( configuration.manifest )


def _require_dataset_root(
    configuration: _configuration.RunConfig
) -> __.Path:
    if configuration.dataset_root is None:
        raise _exceptions.ConfigurationInvalidity(
            'dataset_root', 'a dataset root is required' )
    return configuration.dataset_root

