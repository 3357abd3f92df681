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


''' Command-line interface.

    Exit codes: 0 success, 1 usage error, 2 rejected configuration or
    data, 3 leakage detected by audit or failed gradient check, 4 runtime
    failure.
'''


import appcore.cli as _appcore_cli

from . import __
from . import configuration as _configuration
from . import exceptions as _exceptions
from . import functions as _functions
from . import interfaces as _interfaces
from . import results as _results
from . import state as _state


_scribe = __.acquire_scribe( __name__ )

EXIT_USAGE = 1
EXIT_FINDING = 3
EXIT_RUNTIME = 4


def intercept_errors( ) -> __.cabc.Callable[
    [ __.cabc.Callable[
        ..., __.typx.Coroutine[ __.typx.Any, __.typx.Any, None ] ] ],
    __.cabc.Callable[
        ..., __.typx.Coroutine[ __.typx.Any, __.typx.Any, None ] ]
]:
    ''' Decorator for CLI handlers to intercept exceptions.

        Omnierror exceptions render themselves and exit with their own
        code. Other exceptions are logged and exit as runtime failures.
    '''
    def decorator(
        function: __.cabc.Callable[
            ..., __.typx.Coroutine[ __.typx.Any, __.typx.Any, None ] ]
    ) -> __.cabc.Callable[
        ..., __.typx.Coroutine[ __.typx.Any, __.typx.Any, None ]
    ]:
        @__.funct.wraps( function )
        async def wrapper(
            self: __.typx.Any,
            auxdata: _state.Globals,
            *posargs: __.typx.Any,
            **nomargs: __.typx.Any,
        ) -> None:
            if not isinstance( # pragma: no cover
                auxdata, _state.Globals
            ): raise _exceptions.ContextInvalidity
            stream = await auxdata.display.provide_stream( auxdata.exits )
            try: return await function( self, auxdata, *posargs, **nomargs )
            except _exceptions.Omnierror as exc:
                match auxdata.display.format:
                    case _interfaces.DisplayFormat.JSON:
                        serialized = dict( exc.render_as_json( ) )
                        error_message = __.json.dumps( serialized, indent = 2 )
                    case _interfaces.DisplayFormat.Markdown:
                        lines = exc.render_as_markdown( )
                        error_message = '\n'.join( lines )
                print( error_message, file = stream )
                raise SystemExit( exc.exit_code ) from None
            except Exception as exc:
                _scribe.error( f"{function.__name__} failed: %s", exc )
                match auxdata.display.format:
                    case _interfaces.DisplayFormat.JSON:
                        error_data = {
                            "type": "unexpected_error",
                            "title": "Unexpected Error",
                            "message": str( exc ),
                            "suggestion": (
                                "Please report this issue if it persists." ),
                        }
                        error_message = __.json.dumps( error_data, indent = 2 )
                    case _interfaces.DisplayFormat.Markdown:
                        error_message = f"❌ Unexpected error: {exc}"
                print( error_message, file = stream )
                raise SystemExit( EXIT_RUNTIME ) from None

        return wrapper
    return decorator


CheckpointArgument: __.typx.TypeAlias = __.typx.Annotated[
    __.Path,
    __.tyro.conf.arg( help = __.access_doctab( 'checkpoint argument' ) ),
]
ConfigurationArgument: __.typx.TypeAlias = __.typx.Annotated[
    __.typx.Optional[ __.Path ],
    __.tyro.conf.arg( help = __.access_doctab( 'configuration argument' ) ),
]
DatasetKindArgument: __.typx.TypeAlias = __.typx.Annotated[
    __.typx.Optional[ _interfaces.DatasetKind ],
    __.tyro.conf.arg( help = __.access_doctab( 'dataset kind argument' ) ),
]
DatasetRootArgument: __.typx.TypeAlias = __.typx.Annotated[
    __.typx.Optional[ __.Path ],
    __.tyro.conf.arg( help = __.access_doctab( 'dataset root argument' ) ),
]
ManifestArgument: __.typx.TypeAlias = __.typx.Annotated[
    __.typx.Optional[ __.Path ],
    __.tyro.conf.arg( help = __.access_doctab( 'manifest argument' ) ),
]
NativeResolutionArgument: __.typx.TypeAlias = __.typx.Annotated[
    __.typx.Optional[ bool ],
    __.tyro.conf.arg(
        help = __.access_doctab( 'native resolution argument' ) ),
]
OutputArgument: __.typx.TypeAlias = __.typx.Annotated[
    __.typx.Optional[ __.Path ],
    __.tyro.conf.arg( help = __.access_doctab( 'output argument' ) ),
]
SeedArgument: __.typx.TypeAlias = __.typx.Annotated[
    int, __.tyro.conf.arg( help = __.access_doctab( 'seed argument' ) ),
]
ThresholdArgument: __.typx.TypeAlias = __.typx.Annotated[
    __.typx.Optional[ float ],
    __.tyro.conf.arg( help = __.access_doctab( 'threshold argument' ) ),
]


class RunOptions( __.immut.DataclassObject ):
    ''' Flags which override layered run configuration. '''

    configuration: ConfigurationArgument = None
    dataset_root: DatasetRootArgument = None
    dataset_kind: DatasetKindArgument = None
    manifest: ManifestArgument = None
    output: OutputArgument = None
    preset: __.typx.Annotated[
        __.typx.Optional[ _interfaces.ModelPreset ],
        __.tyro.conf.arg( help = "Architecture preset (base or toy)." ),
    ] = None

    def produce_overrides( self ) -> dict[ str, __.typx.Any ]:
        ''' Configuration layer holding only flags given explicitly. '''
        overrides: dict[ str, __.typx.Any ] = { }
        for name in ( 'dataset_root', 'manifest', 'output' ):
            value = getattr( self, name )
            if value is not None: overrides[ name ] = str( value )
        if self.dataset_kind is not None:
            overrides[ 'dataset_kind' ] = self.dataset_kind.value
        if self.preset is not None:
            overrides[ 'model' ] = { 'preset': self.preset.value }
        return overrides

    def produce_run_config(
        self,
        auxdata: _state.Globals,
        overrides: __.cabc.Mapping[ str, __.typx.Any ],
    ) -> _configuration.RunConfig:
        ''' Assembles run configuration with flags at top precedence. '''
        layer = self.produce_overrides( )
        for section, values in overrides.items( ):
            present = { } if section not in layer else layer[ section ]
            layer[ section ] = { **present, **values }
        location = (
            __.absent if self.configuration is None else self.configuration )
        return _configuration.produce_run_config(
            auxdata, location = location, overrides = layer )


RunOptionsArgument: __.typx.TypeAlias = __.typx.Annotated[
    RunOptions, __.tyro.conf.arg( prefix_name = False ) ]


class SplitCommand(
    _appcore_cli.Command, decorators = ( __.standard_tyro_class, )
):
    ''' Partitions a dataset and writes the JSON manifest. '''

    dataset_root: __.typx.Annotated[
        __.tyro.conf.Positional[ __.Path ],
        __.tyro.conf.arg( help = __.access_doctab( 'dataset root argument' ) ),
    ]
    method: __.typx.Annotated[
        _interfaces.SplitMethod,
        __.tyro.conf.arg( help = "Partitioning strategy." ),
    ] = _interfaces.SplitMethod.Sorted
    kind: __.typx.Annotated[
        _interfaces.DatasetKind,
        __.tyro.conf.arg( help = __.access_doctab( 'dataset kind argument' ) ),
    ] = _interfaces.DatasetKind.KvasirSEG
    ratios: __.typx.Annotated[
        str,
        __.tyro.conf.arg(
            help = __.access_doctab( 'ratios argument' ),
            metavar = 'TRAIN,VAL,TEST' ),
    ] = '80,10,10'
    seed: SeedArgument = 0
    sequence_map: __.typx.Annotated[
        __.typx.Optional[ __.Path ],
        __.tyro.conf.arg(
            aliases = ( '--seqmap', ),
            help = __.access_doctab( 'sequence map argument' ) ),
    ] = None
    val_sequences: __.typx.Annotated[
        tuple[ int, ... ],
        __.tyro.conf.arg(
            aliases = ( '--val-seqs', ),
            help = "Sequence ids held out for validation." ),
    ] = ( )
    test_sequences: __.typx.Annotated[
        tuple[ int, ... ],
        __.tyro.conf.arg(
            aliases = ( '--test-seqs', ),
            help = "Sequence ids held out for testing." ),
    ] = ( )
    output: OutputArgument = None

    @intercept_errors( )
    async def execute( self, auxdata: __.Globals ) -> None:  # pyright: ignore[reportIncompatibleMethodOverride]
        if not isinstance( auxdata, _state.Globals ):  # pragma: no cover
            raise _exceptions.ContextInvalidity
        nomargs: __.NominativeArguments = { }
        if self.sequence_map is not None:
            nomargs[ 'sequence_map' ] = self.sequence_map
        if self.output is not None: nomargs[ 'output' ] = self.output
        result = await _functions.split(
            self.dataset_root,
            kind = self.kind,
            method = self.method,
            ratios = self.ratios,
            seed = self.seed,
            val_sequences = self.val_sequences,
            test_sequences = self.test_sequences,
            **nomargs )
        await _render_and_print_result(
            result, auxdata.display, auxdata.exits )


class AuditCommand(
    _appcore_cli.Command, decorators = ( __.standard_tyro_class, )
):
    ''' Audits a partition manifest for sequence leakage.

        Exits with status 3 when any sequence spans partitions.
    '''

    manifest: __.typx.Annotated[
        __.tyro.conf.Positional[ __.Path ],
        __.tyro.conf.arg( help = __.access_doctab( 'manifest argument' ) ),
    ]
    sequence_map: __.typx.Annotated[
        __.Path,
        __.tyro.conf.arg(
            aliases = ( '--seqmap', ),
            help = __.access_doctab( 'sequence map argument' ) ),
    ]

    @intercept_errors( )
    async def execute( self, auxdata: __.Globals ) -> None:  # pyright: ignore[reportIncompatibleMethodOverride]
        if not isinstance( auxdata, _state.Globals ):  # pragma: no cover
            raise _exceptions.ContextInvalidity
        result = await _functions.audit( self.manifest, self.sequence_map )
        await _render_and_print_result(
            result, auxdata.display, auxdata.exits )
        if not result.is_clean: raise SystemExit( EXIT_FINDING )


class TrainCommand(
    _appcore_cli.Command, decorators = ( __.standard_tyro_class, )
):
    ''' Trains the network, checkpointing best validation weights. '''

    run: RunOptionsArgument = __.dcls.field(
        default_factory = lambda: RunOptions( ) )
    epochs: __.typx.Annotated[
        __.typx.Optional[ int ],
        __.tyro.conf.arg( help = "Number of training epochs." ),
    ] = None
    batch_size: __.typx.Annotated[
        __.typx.Optional[ int ],
        __.tyro.conf.arg( help = "Images per optimization step." ),
    ] = None
    learning_rate: __.typx.Annotated[
        __.typx.Optional[ float ],
        __.tyro.conf.arg( help = "Initial learning rate." ),
    ] = None
    seed: __.typx.Annotated[
        __.typx.Optional[ int ],
        __.tyro.conf.arg( help = __.access_doctab( 'seed argument' ) ),
    ] = None
    workers: __.typx.Annotated[
        __.typx.Optional[ int ],
        __.tyro.conf.arg( help = "Data loading worker processes." ),
    ] = None
    augment: __.typx.Annotated[
        __.typx.Optional[ bool ],
        __.tyro.conf.arg( help = "Enable training augmentation." ),
    ] = None
    encoder_weights: __.typx.Annotated[
        __.typx.Optional[ __.Path ],
        __.tyro.conf.arg(
            help = "Archive of converted 'swin.encoder.*' tensors." ),
    ] = None
    reveal_internals: __.typx.Annotated[
        bool,
        __.tyro.conf.arg( help = "Show parameter count." ),
    ] = False

    @intercept_errors( )
    async def execute( self, auxdata: __.Globals ) -> None:  # pyright: ignore[reportIncompatibleMethodOverride]
        if not isinstance( auxdata, _state.Globals ):  # pragma: no cover
            raise _exceptions.ContextInvalidity
        train = {
            name: getattr( self, name ) for name in (
                'epochs', 'batch_size', 'learning_rate', 'seed',
                'workers', 'augment' )
            if getattr( self, name ) is not None }
        configuration = self.run.produce_run_config(
            auxdata, { 'train': train } )
        encoder_weights = (
            __.absent if self.encoder_weights is None
            else self.encoder_weights )
        result = await _functions.train(
            configuration, encoder_weights = encoder_weights )
        await _render_and_print_result(
            result, auxdata.display, auxdata.exits,
            reveal_internals = self.reveal_internals )


class EvaluateCommand(
    _appcore_cli.Command, decorators = ( __.standard_tyro_class, )
):
    ''' Evaluates a checkpoint on a partition or a whole dataset. '''

    checkpoint: __.typx.Annotated[
        __.tyro.conf.Positional[ __.Path ],
        __.tyro.conf.arg( help = __.access_doctab( 'checkpoint argument' ) ),
    ]
    run: RunOptionsArgument = __.dcls.field(
        default_factory = lambda: RunOptions( ) )
    partition: __.typx.Annotated[
        _interfaces.Partition,
        __.tyro.conf.arg( help = "Manifest partition to evaluate." ),
    ] = _interfaces.Partition.Test
    full_dataset: __.typx.Annotated[
        bool,
        __.tyro.conf.arg(
            help = "Evaluate every image of the dataset; no manifest." ),
    ] = False
    threshold: ThresholdArgument = None
    native_resolution: NativeResolutionArgument = None
    reveal_internals: __.typx.Annotated[
        bool,
        __.tyro.conf.arg( help = "Show per-image metrics." ),
    ] = False

    @intercept_errors( )
    async def execute( self, auxdata: __.Globals ) -> None:  # pyright: ignore[reportIncompatibleMethodOverride]
        if not isinstance( auxdata, _state.Globals ):  # pragma: no cover
            raise _exceptions.ContextInvalidity
        configuration = self.run.produce_run_config(
            auxdata, { 'evaluation': _produce_evaluation_overrides(
                self.threshold, self.native_resolution ) } )
        result = await _functions.evaluate(
            configuration, self.checkpoint,
            partition = self.partition,
            full_dataset = self.full_dataset )
        await _render_and_print_result(
            result, auxdata.display, auxdata.exits,
            reveal_internals = self.reveal_internals )


class PredictCommand(
    _appcore_cli.Command, decorators = ( __.standard_tyro_class, )
):
    ''' Writes binary PNG masks for a directory of images. '''

    checkpoint: __.typx.Annotated[
        __.tyro.conf.Positional[ __.Path ],
        __.tyro.conf.arg( help = __.access_doctab( 'checkpoint argument' ) ),
    ]
    images: __.typx.Annotated[
        __.tyro.conf.Positional[ __.Path ],
        __.tyro.conf.arg( help = "Directory of images to segment." ),
    ]
    run: RunOptionsArgument = __.dcls.field(
        default_factory = lambda: RunOptions( ) )
    threshold: ThresholdArgument = None
    native_resolution: NativeResolutionArgument = None
    reveal_internals: __.typx.Annotated[
        bool,
        __.tyro.conf.arg( help = "List every written mask." ),
    ] = False

    @intercept_errors( )
    async def execute( self, auxdata: __.Globals ) -> None:  # pyright: ignore[reportIncompatibleMethodOverride]
        if not isinstance( auxdata, _state.Globals ):  # pragma: no cover
            raise _exceptions.ContextInvalidity
        configuration = self.run.produce_run_config(
            auxdata, { 'evaluation': _produce_evaluation_overrides(
                self.threshold, self.native_resolution ) } )
        result = await _functions.predict(
            configuration, self.checkpoint, self.images )
        await _render_and_print_result(
            result, auxdata.display, auxdata.exits,
            reveal_internals = self.reveal_internals )


class GradcheckCommand(
    _appcore_cli.Command, decorators = ( __.standard_tyro_class, )
):
    ''' Verifies analytic gradients against finite differences.

        Exits with status 3 when any check fails.
    '''

    names: __.typx.Annotated[
        tuple[ str, ... ],
        __.tyro.conf.arg( help = "Checks to run; all when omitted." ),
    ] = ( )
    seed: SeedArgument = 0
    reveal_internals: __.typx.Annotated[
        bool,
        __.tyro.conf.arg( help = "Show coordinate counts." ),
    ] = False

    @intercept_errors( )
    async def execute( self, auxdata: __.Globals ) -> None:  # pyright: ignore[reportIncompatibleMethodOverride]
        if not isinstance( auxdata, _state.Globals ):  # pragma: no cover
            raise _exceptions.ContextInvalidity
        names = self.names or __.absent
        result = await _functions.gradcheck( names, seed = self.seed )
        await _render_and_print_result(
            result, auxdata.display, auxdata.exits,
            reveal_internals = self.reveal_internals )
        if not result.passed: raise SystemExit( EXIT_FINDING )


class Cli( _appcore_cli.Application ):
    ''' Polyp segmentation with dual-branch transformer networks. '''

    display: _state.DisplayOptions = __.dcls.field(
        default_factory = _state.DisplayOptions )
    command: __.typx.Union[
        __.typx.Annotated[
            SplitCommand,
            __.tyro.conf.subcommand( 'split', prefix_name = False ),
        ],
        __.typx.Annotated[
            AuditCommand,
            __.tyro.conf.subcommand( 'audit', prefix_name = False ),
        ],
        __.typx.Annotated[
            TrainCommand,
            __.tyro.conf.subcommand( 'train', prefix_name = False ),
        ],
        __.typx.Annotated[
            EvaluateCommand,
            __.tyro.conf.subcommand( 'eval', prefix_name = False ),
        ],
        __.typx.Annotated[
            PredictCommand,
            __.tyro.conf.subcommand( 'predict', prefix_name = False ),
        ],
        __.typx.Annotated[
            GradcheckCommand,
            __.tyro.conf.subcommand( 'gradcheck', prefix_name = False ),
        ],
    ]

    async def execute( self, auxdata: __.Globals ) -> None:
        ''' Executes selected subcommand. '''
        if not isinstance( auxdata, _state.Globals ):  # pragma: no cover
            raise _exceptions.ContextInvalidity
        await self.command( auxdata )

    async def prepare(
        self, exits: __.ctxl.AsyncExitStack
    ) -> _state.Globals:
        ''' Prepares global state with display options. '''
        auxdata_base = await super( ).prepare( exits )
        nomargs = {
            field.name: getattr( auxdata_base, field.name )
            for field in __.dcls.fields( auxdata_base )
            if not field.name.startswith( '_' ) }
        return _state.Globals( display = self.display, **nomargs )


def parse_arguments(
    arguments: __.typx.Optional[ __.cabc.Sequence[ str ] ] = None
) -> Cli:
    ''' Parses command line into application.

        Usage errors exit with status 1.
    '''
    config = (
        __.tyro.conf.EnumChoicesFromValues,
        __.tyro.conf.HelptextFromCommentsOff,
    )
    with __.warnings.catch_warnings( ):
        __.warnings.filterwarnings(
            'ignore',
            message = r'Mutable type .* is used as a default value.*',
            category = UserWarning,
            module = 'tyro.constructors._struct_spec_dataclass' )
        try: return __.tyro.cli( Cli, args = arguments, config = config )
        except SystemExit as exc:
            # Argument parsing reports usage errors as status 2.
            if exc.code == 2: raise SystemExit( EXIT_USAGE ) from None
            raise


def execute( ) -> None:
    ''' Entrypoint for CLI execution. '''
    application = parse_arguments( )
    try: __.asyncio.run( application( ) )
    except SystemExit: raise
    except BaseException as exc:
        __.report_exceptions( exc, _scribe )
        raise SystemExit( EXIT_RUNTIME ) from None


def _produce_evaluation_overrides(
    threshold: __.typx.Optional[ float ],
    native_resolution: __.typx.Optional[ bool ],
) -> dict[ str, __.typx.Any ]:
    overrides: dict[ str, __.typx.Any ] = { }
    if threshold is not None: overrides[ 'threshold' ] = threshold
    if native_resolution is not None:
        overrides[ 'native_resolution' ] = native_resolution
    return overrides


async def _render_and_print_result(
    result: _results.ResultBase,
    display: _state.DisplayOptions,
    exits: __.ctxl.AsyncExitStack,
    **nomargs: __.typx.Any
) -> None:
    ''' Centralizes result rendering logic with Rich formatting support. '''
    stream = await display.provide_stream( exits )
    match display.format:
        case _interfaces.DisplayFormat.JSON:
            serialized = dict( result.render_as_json( ) )
            output = __.json.dumps( serialized, indent = 2 )
            print( output, file = stream )
        case _interfaces.DisplayFormat.Markdown:
            lines = result.render_as_markdown( **nomargs )
            if display.determine_colorization( stream ):
                from rich.console import Console
                from rich.markdown import Markdown
                console = Console( file = stream, force_terminal = True )
                markdown_obj = Markdown( '\n'.join( lines ) )
                console.print( markdown_obj )
            else:
                output = '\n'.join( lines )
                print( output, file = stream )
