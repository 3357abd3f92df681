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


''' Run configuration assembled from layered sources.

    Layers, lowest precedence first: dataclass defaults, the ``general.toml``
    package configuration, a JSON run-configuration file, and command-line
    flags. Keys may be written with hyphens or underscores. Unknown keys at
    any depth are rejected before work starts.

    The ``model`` table takes a ``preset`` key naming the base architecture;
    its other keys override fields of that preset.
'''


from . import __
from . import architecture as _architecture
from . import augment as _augment
from . import exceptions as _exceptions
from . import interfaces as _interfaces
from . import training as _training


_scribe = __.acquire_scribe( __name__ )

Layer: __.typx.TypeAlias = __.cabc.Mapping[ str, __.typx.Any ]


class EvaluationConfig( __.immut.DataclassObject ):
    ''' Thresholding and comparison resolution of evaluation runs. '''

    threshold: float = 0.5
    native_resolution: bool = False


class RunConfig( __.immut.DataclassObject ):
    ''' Everything a subcommand needs, validated as one unit. '''

    model: _architecture.ModelConfig = __.dcls.field(
        default_factory = _architecture.base_config )
    train: _training.TrainConfig = __.dcls.field(
        default_factory = _training.TrainConfig )
    augment: _augment.AugmentConfig = __.dcls.field(
        default_factory = _augment.AugmentConfig )
    evaluation: EvaluationConfig = __.dcls.field(
        default_factory = EvaluationConfig )
    dataset_root: __.typx.Optional[ __.Path ] = None
    dataset_kind: _interfaces.DatasetKind = _interfaces.DatasetKind.KvasirSEG
    manifest: __.typx.Optional[ __.Path ] = None
    output: __.Path = __.Path( 'outputs' )


def assemble_run_config( layers: __.cabc.Sequence[ Layer ] ) -> RunConfig:
    ''' Merges layers in order and constructs validated configuration. '''
    merged: dict[ str, __.typx.Any ] = { }
    for layer in layers:
        _merge_into( merged, _normalize_keys( layer, '<root>' ) )
    model = merged.pop( 'model', { } )
    configuration = _construct( RunConfig, merged, '<root>' )
    configuration = __.dcls.replace(
        configuration, model = _construct_model( model ) )
    return validate_run_config( configuration )


def extract_general_layer( auxdata: __.Globals ) -> Layer:
    ''' Package configuration as loaded at application preparation. '''
    configuration = auxdata.configuration
    if not configuration: return { }
    return __.typx.cast( Layer, configuration )


def load_configuration_file( location: __.Path | str ) -> Layer:
    ''' Reads JSON run-configuration file. '''
    location = __.Path( location )
    try: content = __.json.loads( location.read_text( encoding = 'utf-8' ) )
    except ( OSError, ValueError ) as exc:
        raise _exceptions.ConfigurationInvalidity(
            str( location ), f"unreadable JSON: {exc}" ) from exc
    if not isinstance( content, dict ):
        raise _exceptions.ConfigurationInvalidity(
            str( location ), 'top level must be an object' )
    _scribe.debug( f"Loaded run configuration from '{location}'." )
    return __.typx.cast( Layer, content )


def produce_run_config(
    auxdata: __.Globals,
    location: __.Absential[ __.Path ] = __.absent,
    overrides: __.Absential[ Layer ] = __.absent,
) -> RunConfig:
    ''' Run configuration from package data, optional file, and flags. '''
    layers: list[ Layer ] = [ extract_general_layer( auxdata ) ]
    if not __.is_absent( location ):
        layers.append( load_configuration_file( location ) )
    if not __.is_absent( overrides ): layers.append( overrides )
    return assemble_run_config( layers )


def validate_run_config( configuration: RunConfig ) -> RunConfig:
    ''' Checks every section for cross-field consistency. '''
    _architecture.validate_model_config( configuration.model )
    _training.validate_train_config( configuration.train )
    _augment.validate_augment_config( configuration.augment )
    threshold = configuration.evaluation.threshold
    if not 0 < threshold < 1:
        raise _exceptions.ConfigurationInvalidity(
            'evaluation.threshold', f"{threshold} outside (0, 1)" )
    return configuration


def _coerce(
    hint: __.typx.Any, value: __.typx.Any, location: str
) -> __.typx.Any:
    origin = __.typx.get_origin( hint )
    if origin in ( __.typx.Union, __.types.UnionType ):
        return _coerce_union( hint, value, location )
    if origin is tuple: return _coerce_tuple( hint, value, location )
    if isinstance( hint, type ):
        if __.dcls.is_dataclass( hint ):
            return _construct( hint, value, location )
        if issubclass( hint, __.enum.Enum ):
            try: return hint( value )
            except ValueError as exc:
                choices = ', '.join( str( m.value ) for m in hint )
                raise _exceptions.ConfigurationInvalidity(
                    location, f"expected one of {choices}" ) from exc
        if issubclass( hint, __.Path ):
            if isinstance( value, ( str, __.Path ) ): return __.Path( value )
        elif hint is bool:
            if isinstance( value, bool ): return value
        elif hint is int:
            if isinstance( value, int ) and not isinstance( value, bool ):
                return value
        elif hint is float:
            if isinstance( value, ( int, float ) ) and not isinstance(
                value, bool
            ): return float( value )
        elif isinstance( value, hint ): return value
        raise _exceptions.ConfigurationInvalidity(
            location, f"expected {hint.__name__}, got {value!r}" )
    return value


def _coerce_tuple(
    hint: __.typx.Any, value: __.typx.Any, location: str
) -> tuple[ __.typx.Any, ... ]:
    if not isinstance( value, ( list, tuple ) ):
        raise _exceptions.ConfigurationInvalidity(
            location, f"expected an array, got {value!r}" )
    items = __.typx.cast( __.cabc.Sequence[ __.typx.Any ], value )
    arguments = __.typx.get_args( hint )
    if len( arguments ) == 2 and arguments[ 1 ] is Ellipsis:
        return tuple(
            _coerce( arguments[ 0 ], item, f"{location}[{index}]" )
            for index, item in enumerate( items ) )
    if len( arguments ) != len( items ):
        raise _exceptions.ConfigurationInvalidity(
            location, f"expected {len( arguments )} items" )
    return tuple(
        _coerce( argument, item, f"{location}[{index}]" )
        for index, ( argument, item ) in enumerate(
            zip( arguments, items ) ) )


def _coerce_union(
    hint: __.typx.Any, value: __.typx.Any, location: str
) -> __.typx.Any:
    arguments = __.typx.get_args( hint )
    if value is None:
        if type( None ) in arguments: return None
        raise _exceptions.ConfigurationInvalidity(
            location, 'null not allowed' )
    candidates = [ a for a in arguments if a is not type( None ) ]
    for candidate in candidates[ :-1 ]:
        try: return _coerce( candidate, value, location )
        except _exceptions.ConfigurationInvalidity: continue
    return _coerce( candidates[ -1 ], value, location )


def _construct(
    cls: type[ __.typx.Any ], data: __.typx.Any, location: str
) -> __.typx.Any:
    if not isinstance( data, __.cabc.Mapping ):
        raise _exceptions.ConfigurationInvalidity(
            location, f"expected a table, got {data!r}" )
    table = __.typx.cast( Layer, data )
    hints = { field.name: field.type for field in __.dcls.fields( cls ) }
    unknown = sorted( set( table ) - set( hints ) )
    if unknown:
        raise _exceptions.ConfigurationInvalidity(
            _join_location( location, unknown[ 0 ] ), 'unknown key' )
    arguments = {
        name: _coerce(
            hints[ name ], value, _join_location( location, name ) )
        for name, value in table.items( ) }
    return cls( **arguments )


def _construct_model( data: __.typx.Any ) -> _architecture.ModelConfig:
    if not isinstance( data, __.cabc.Mapping ):
        raise _exceptions.ConfigurationInvalidity(
            'model', f"expected a table, got {data!r}" )
    overrides = dict( __.typx.cast( Layer, data ) )
    preset = _coerce(
        _interfaces.ModelPreset,
        overrides.pop( 'preset', _interfaces.ModelPreset.Base.value ),
        'model.preset' )
    merged = _architecture.produce_preset( preset ).render_as_json( )
    _merge_into( merged, overrides )
    return _construct( _architecture.ModelConfig, merged, 'model' )


def _join_location( location: str, name: str ) -> str:
    if location == '<root>': return name
    return f"{location}.{name}"


def _merge_into(
    target: dict[ str, __.typx.Any ], source: Layer
) -> None:
    for name, value in source.items( ):
        present = target.get( name )
        if isinstance( present, dict ) and isinstance( value, dict ):
            _merge_into(
                __.typx.cast( dict[ str, __.typx.Any ], present ),
                __.typx.cast( Layer, value ) )
        else: target[ name ] = value


def _normalize_keys( data: __.typx.Any, location: str ) -> __.typx.Any:
    if isinstance( data, __.cabc.Mapping ):
        table = __.typx.cast( Layer, data )
        return {
            str( name ).replace( '-', '_' ): _normalize_keys(
                value, _join_location( location, str( name ) ) )
            for name, value in table.items( ) }
    return data
