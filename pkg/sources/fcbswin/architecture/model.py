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


''' Dual-branch network: transformer and convolutional branches fused. '''


from . import __
from . import archive as _archive
from . import configuration as _configuration
from . import fcb as _fcb
from . import swin as _swin
from .. import randomness as _randomness


_scribe = __.acquire_scribe( __name__ )

_INITIAL_DEVIATION = 0.02
_INITIAL_LOG_TEMPERATURE = __.math.log( 0.1 )


class PredictionHead( __.nn.Module ):
    ''' Residual blocks over fused features, then 1x1 convolution to logits.
    '''

    def __init__(
        self, channels: int, config: _configuration.HeadConfig
    ) -> None:
        super( ).__init__( )
        self.blocks = __.nn.Sequential(
            _fcb.ResidualBlock( 2 * channels, channels, config.groups ),
            *( _fcb.ResidualBlock( channels, channels, config.groups )
               for _ in range( config.blocks - 1 ) ) )
        self.conv_out = __.nn.Conv2d( channels, 1, 1 )

    def forward( self, features: __.Tensor ) -> __.Tensor:
        return self.conv_out( self.blocks( features ) )


class FcbSwin( __.nn.Module ):
    ''' Produces one-channel segmentation logits at input resolution.

        Transformer branch output is upsampled bilinearly to input size and
        concatenated with convolutional branch output before the head.
        Logits are unbounded; probabilities are the caller's concern.
    '''

    def __init__( self, config: _configuration.ModelConfig ) -> None:
        super( ).__init__( )
        self.config = _configuration.validate_model_config( config )
        self.swin = _swin.TransformerBranch( config.swin )
        self.fcb = _fcb.ConvolutionalBranch( config.fcb )
        self.head = PredictionHead( config.fusion_channels, config.head )

    def forward( self, image: __.Tensor ) -> __.Tensor:
        self._validate_input( image )
        size = tuple( image.shape[ -2: ] )
        transformer = __.nnfunc.interpolate(
            self.swin( image ), size = size,
            mode = 'bilinear', align_corners = False )
        convolutional = self.fcb( image )
        return self.head(
            __.torch.cat( ( transformer, convolutional ), dim = 1 ) )

    def _validate_input( self, image: __.Tensor ) -> None:
        channels = self.config.swin.in_channels
        size = self.config.img_size
        if image.ndim != 4:
            raise __.ConfigurationMismatch(
                f"expected batched 4-dimensional input, "
                f"got {image.ndim} dimensions" )
        if image.shape[ 1 ] != channels:
            raise __.ConfigurationMismatch(
                f"expected {channels} input channels, "
                f"got {image.shape[ 1 ]}" )
        if tuple( image.shape[ -2: ] ) != ( size, size ):
            raise __.ConfigurationMismatch(
                f"expected {size}x{size} input, "
                f"got {image.shape[ -2 ]}x{image.shape[ -1 ]}" )


def build_model(
    config: _configuration.ModelConfig, seed: int = 0
) -> FcbSwin:
    ''' Constructs network with deterministic initial parameters. '''
    model = FcbSwin( config )
    generator = __.torch.Generator( ).manual_seed(
        _randomness.derive_key( seed ) )
    initialize_parameters( model, generator )
    _scribe.debug(
        f"Built model with {count_parameters( model )} parameters." )
    return model


def initialize_parameters(
    model: __.nn.Module, generator: __.torch.Generator
) -> None:
    ''' Truncated normal weights, zero biases, unit norm scales.

        Attention log-temperatures start at ``log( 0.1 )``; position bias
        tables share the weight distribution.
    '''
    with __.torch.no_grad( ):
        for module in model.modules( ):
            if isinstance( module, ( __.nn.Linear, __.nn.Conv2d ) ):
                _draw_truncated_normal( module.weight, generator )
                if module.bias is not None: module.bias.zero_( )
            elif isinstance( module, ( __.nn.LayerNorm, __.nn.GroupNorm ) ):
                module.weight.fill_( 1.0 )
                module.bias.zero_( )
            elif isinstance( module, _swin.WindowAttention ):
                module.log_temperature.fill_( _INITIAL_LOG_TEMPERATURE )
                _draw_truncated_normal( module.position_bias, generator )


def count_parameters( model: __.nn.Module ) -> int:
    ''' Total number of scalar parameters. '''
    return sum( parameter.numel( ) for parameter in model.parameters( ) )


def save_weights( model: __.nn.Module, location: __.Path | str ) -> __.Path:
    ''' Writes every named parameter and persistent buffer to archive. '''
    return _archive.save_archive( model.state_dict( ), location )


def load_weights(
    location: __.Path | str, config: _configuration.ModelConfig
) -> FcbSwin:
    ''' Builds model for configuration and restores archived weights. '''
    model = FcbSwin( config )
    restore_weights( model, _archive.load_archive( location ), location )
    return model


def restore_weights(
    model: __.nn.Module,
    tensors: __.cabc.Mapping[ str, __.Tensor ],
    location: __.Path | str = '<memory>',
) -> None:
    ''' Validates names and shapes, then copies tensors into model. '''
    expected = {
        name: tuple( tensor.shape )
        for name, tensor in model.state_dict( ).items( ) }
    _archive.validate_tensors( location, expected, tensors )
    model.load_state_dict( dict( tensors ) )


def _draw_truncated_normal(
    tensor: __.Tensor, generator: __.torch.Generator
) -> None:
    __.nn.init.trunc_normal_(
        tensor, std = _INITIAL_DEVIATION,
        a = -2 * _INITIAL_DEVIATION, b = 2 * _INITIAL_DEVIATION,
        generator = generator )
