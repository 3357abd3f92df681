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


''' Finite-difference verification of analytic gradients.

    Every check runs in float64 and compares autograd gradients against
    central differences with step ``1e-5``. Layer checks perturb each
    scalar of input and parameters in turn; the end-to-end check perturbs
    along seeded random unit directions.

    Rectifiers make objectives piecewise smooth. A coordinate whose
    central differences at full and half step disagree has a kink within
    reach of the step and is skipped; a check fails if it skips more than
    one coordinate and more than one in a hundred.
'''


from . import __
from . import architecture as _architecture
from . import evaluation as _evaluation
from . import exceptions as _exceptions
from . import results as _results


_scribe = __.acquire_scribe( __name__ )

Objective: __.typx.TypeAlias = __.cabc.Callable[ [ ], __.Tensor ]

STEP = 1e-5
GRADIENT_FLOOR = 1e-3
SKIPPED_FRACTION_MAX = 0.01
TOLERANCE_LAYER = 1e-4
TOLERANCE_LOSS = 1e-6
TOLERANCE_MODEL = 1e-3

_DTYPE = __.torch.float64
_PARAMETER_SCALE = 0.5


def relative_error( numeric: float, analytic: float ) -> float:
    ''' Difference relative to larger magnitude, floored for tiny values.
    '''
    scale = max( abs( numeric ), abs( analytic ), GRADIENT_FLOOR )
    return abs( numeric - analytic ) / scale


def check_elementwise(
    name: str,
    objective: Objective,
    tensors: __.cabc.Sequence[ __.Tensor ],
    tolerance: float,
    step: float = STEP,
) -> _results.GradientCheck:
    ''' Compares gradient of every scalar of every tensor. '''
    analytic = _produce_analytic( objective, tensors )
    error_max = 0.0
    skipped = 0
    count = 0
    with __.torch.no_grad( ):
        for tensor, gradient in zip( tensors, analytic ):
            entries = tensor.view( -1 )
            expected = gradient.reshape( -1 )
            for index in range( entries.numel( ) ):
                count += 1
                full, half = _differentiate_entry(
                    objective, entries, index, step )
                if _is_kinked( full, half, tolerance ):
                    skipped += 1
                    continue
                error_max = max(
                    error_max,
                    relative_error( full, expected[ index ].item( ) ) )
    return _conclude( name, tolerance, error_max, count, skipped )


def check_directional(
    name: str,
    objective: Objective,
    tensors: __.cabc.Sequence[ __.Tensor ],
    tolerance: float,
    directions: int,
    generator: __.torch.Generator,
    step: float = STEP,
) -> _results.GradientCheck:
    ''' Compares directional derivatives along random unit directions. '''
    analytic = _produce_analytic( objective, tensors )
    error_max = 0.0
    skipped = 0
    with __.torch.no_grad( ):
        origins = [ tensor.detach( ).clone( ) for tensor in tensors ]
        for _ in range( directions ):
            vectors = _draw_direction( tensors, generator )
            expected = __.math.fsum(
                ( gradient * vector ).sum( ).item( )
                for gradient, vector in zip( analytic, vectors ) )
            values: list[ float ] = [ ]
            for offset in ( step, -step, step / 2, -step / 2 ):
                for tensor, origin, vector in zip(
                    tensors, origins, vectors
                ): tensor.copy_( origin + offset * vector )
                values.append( objective( ).item( ) )
            for tensor, origin in zip( tensors, origins ):
                tensor.copy_( origin )
            full = ( values[ 0 ] - values[ 1 ] ) / ( 2 * step )
            half = ( values[ 2 ] - values[ 3 ] ) / step
            if _is_kinked( full, half, tolerance ):
                skipped += 1
                continue
            error_max = max( error_max, relative_error( full, expected ) )
    return _conclude( name, tolerance, error_max, directions, skipped )


def check_window_attention(
    generator: __.torch.Generator
) -> _results.GradientCheck:
    ''' Shifted-window attention with mask, over four windows. '''
    module = _prepare_module(
        _architecture.WindowAttention( 8, 2, 4 ), generator )
    tokens = _draw_input( ( 4, 16, 8 ), generator )
    mask = _architecture.produce_shift_mask(
        8, 8, 4, 2, dtype = _DTYPE )
    return _check_module(
        'cosine_window_attention', module, ( tokens, ),
        generator, mask = mask )


def check_swin_block(
    generator: __.torch.Generator
) -> _results.GradientCheck:
    ''' Shifted block over an 8x8 grid of 4x4 windows. '''
    module = _prepare_module(
        _architecture.SwinBlock( 8, 2, 4, shift = 2 ), generator )
    features = _draw_input( ( 1, 8, 8, 8 ), generator )
    return _check_module( 'swinv2_block', module, ( features, ), generator )


def check_patch_merging(
    generator: __.torch.Generator
) -> _results.GradientCheck:
    ''' Merging of a 4x4 grid with four channels. '''
    module = _prepare_module( _architecture.PatchMerging( 4 ), generator )
    features = _draw_input( ( 1, 4, 4, 4 ), generator )
    return _check_module( 'patch_merge', module, ( features, ), generator )


def check_scse( generator: __.torch.Generator ) -> _results.GradientCheck:
    ''' Concurrent squeeze and excitation over eight channels. '''
    module = _prepare_module( _architecture.Scse( 8, 2 ), generator )
    features = _draw_input( ( 1, 8, 4, 4 ), generator )
    return _check_module( 'scse', module, ( features, ), generator )


def check_residual_block(
    generator: __.torch.Generator
) -> _results.GradientCheck:
    ''' Projected residual block on a 1x4x5x5 input. '''
    module = _prepare_module(
        _architecture.ResidualBlock( 4, 6, groups = 2 ), generator )
    features = _draw_input( ( 1, 4, 5, 5 ), generator )
    return _check_module(
        'residual_block_postnorm', module, ( features, ), generator )


def check_decoder_block(
    generator: __.torch.Generator
) -> _results.GradientCheck:
    ''' Decoder block upsampling 2x2 features onto a 4x4 skip. '''
    module = _prepare_module(
        _architecture.DecoderBlock( 8, 4, 8, groups = 4, reduction = 2 ),
        generator )
    previous = _draw_input( ( 1, 8, 2, 2 ), generator )
    skip = _draw_input( ( 1, 4, 4, 4 ), generator )
    return _check_module(
        'decoder_block', module, ( previous, skip ), generator )


def check_loss( generator: __.torch.Generator ) -> _results.GradientCheck:
    ''' Training loss on 2x2 logits against a diagonal target. '''
    logits = _draw_input( ( 1, 1, 2, 2 ), generator )
    target = __.torch.tensor(
        [ [ [ [ 1.0, 0.0 ], [ 0.0, 1.0 ] ] ] ], dtype = _DTYPE )
    return check_elementwise(
        'bce_dice_loss',
        lambda: _evaluation.bce_dice_loss( logits, target ),
        ( logits, ), TOLERANCE_LOSS )


def check_model(
    generator: __.torch.Generator, directions: int = 16
) -> _results.GradientCheck:
    ''' Toy network end to end, objective mean of squared logits. '''
    config = _architecture.toy_config( )
    model = _prepare_module( _architecture.FcbSwin( config ), generator )
    size = config.img_size
    image = _draw_input(
        ( 1, config.swin.in_channels, size, size ), generator )
    tensors = ( image, *model.parameters( ) )
    return check_directional(
        'end_to_end', lambda: model( image ).pow( 2 ).mean( ),
        tensors, TOLERANCE_MODEL, directions, generator )


_checks: __.cabc.Mapping[
    str, __.cabc.Callable[ [ __.torch.Generator ], _results.GradientCheck ]
] = __.immut.Dictionary(
    cosine_window_attention = check_window_attention,
    swinv2_block = check_swin_block,
    patch_merge = check_patch_merging,
    scse = check_scse,
    residual_block_postnorm = check_residual_block,
    decoder_block = check_decoder_block,
    bce_dice_loss = check_loss,
    end_to_end = check_model,
)
check_names = tuple( _checks )


def run_suite(
    names: __.Absential[ __.cabc.Sequence[ str ] ] = __.absent,
    seed: int = 0,
) -> _results.VerificationReport:
    ''' Runs named checks, or all of them, each from its own seed. '''
    selection = check_names if __.is_absent( names ) else tuple( names )
    unknown = [ name for name in selection if name not in _checks ]
    if unknown:
        raise _exceptions.ConfigurationInvalidity(
            'gradcheck.names',
            f"unknown checks {unknown}; choose from {list( check_names )}" )
    checks: list[ _results.GradientCheck ] = [ ]
    for index, name in enumerate( selection ):
        generator = __.torch.Generator( ).manual_seed( seed + index )
        check = _checks[ name ]( generator )
        _scribe.info(
            f"Gradient check {name}: "
            f"{'passed' if check.passed else 'FAILED'} "
            f"(max relative error {check.error_relative_max:.3e})" )
        checks.append( check )
    return _results.VerificationReport( checks = tuple( checks ) )


def _check_module(
    name: str,
    module: __.nn.Module,
    inputs: tuple[ __.Tensor, ... ],
    generator: __.torch.Generator,
    **nomargs: __.typx.Any,
) -> _results.GradientCheck:
    output_shape = module( *inputs, **nomargs ).shape
    projection = __.torch.randn(
        output_shape, generator = generator, dtype = _DTYPE )
    projection /= __.math.sqrt( projection.numel( ) )

    def objective( ) -> __.Tensor:
        return ( module( *inputs, **nomargs ) * projection ).sum( )

    return check_elementwise(
        name, objective, ( *inputs, *module.parameters( ) ),
        TOLERANCE_LAYER )


def _conclude(
    name: str, tolerance: float, error_max: float, count: int, skipped: int
) -> _results.GradientCheck:
    passed = (
        error_max < tolerance
        and skipped <= max( 1.0, SKIPPED_FRACTION_MAX * count ) )
    return _results.GradientCheck(
        name = name,
        passed = passed,
        relative_tolerance = tolerance,
        error_relative_max = error_max,
        coordinates_count = count,
        coordinates_skipped = skipped )


def _differentiate_entry(
    objective: Objective, entries: __.Tensor, index: int, step: float
) -> tuple[ float, float ]:
    origin = entries[ index ].item( )
    values: list[ float ] = [ ]
    for offset in ( step, -step, step / 2, -step / 2 ):
        entries[ index ] = origin + offset
        values.append( objective( ).item( ) )
    entries[ index ] = origin
    full = ( values[ 0 ] - values[ 1 ] ) / ( 2 * step )
    half = ( values[ 2 ] - values[ 3 ] ) / step
    return full, half


def _draw_direction(
    tensors: __.cabc.Sequence[ __.Tensor ], generator: __.torch.Generator
) -> list[ __.Tensor ]:
    vectors = [
        __.torch.randn( tensor.shape, generator = generator, dtype = _DTYPE )
        for tensor in tensors ]
    norm = __.math.sqrt( __.math.fsum(
        vector.pow( 2 ).sum( ).item( ) for vector in vectors ) )
    return [ vector / norm for vector in vectors ]


def _draw_input(
    shape: tuple[ int, ... ], generator: __.torch.Generator
) -> __.Tensor:
    return __.torch.randn(
        shape, generator = generator, dtype = _DTYPE ).requires_grad_( )


def _is_kinked( full: float, half: float, tolerance: float ) -> bool:
    return relative_error( full, half ) > tolerance / 10


_Module = __.typx.TypeVar( '_Module', bound = __.nn.Module )


def _prepare_module(
    module: _Module, generator: __.torch.Generator
) -> _Module:
    module.to( _DTYPE )
    with __.torch.no_grad( ):
        for parameter in module.parameters( ):
            parameter.copy_( _PARAMETER_SCALE * __.torch.randn(
                parameter.shape, generator = generator, dtype = _DTYPE ) )
    return module


def _produce_analytic(
    objective: Objective, tensors: __.cabc.Sequence[ __.Tensor ]
) -> list[ __.Tensor ]:
    gradients = __.torch.autograd.grad(
        objective( ), tuple( tensors ), allow_unused = True )
    return [
        __.torch.zeros_like( tensor ) if gradient is None
        else gradient.detach( )
        for tensor, gradient in zip( tensors, gradients ) ]
