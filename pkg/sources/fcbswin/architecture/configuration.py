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


''' Architectural hyperparameters and named presets. '''


from . import __
from .. import interfaces as _interfaces


class DecoderConfig( __.immut.DataclassObject ):
    ''' Transformer branch decoder widths, deepest first. '''

    channels: tuple[ int, ... ] = ( 512, 256, 64 )
    groups: int = 32
    scse_reduction: int = 16


class SwinConfig( __.immut.DataclassObject ):
    ''' Transformer branch: SwinV2 encoder and SCSE decoder. '''

    img_size: int = 384
    patch_size: int = 4
    in_channels: int = 3
    embed_dim: int = 128
    depths: tuple[ int, ... ] = ( 2, 2, 18, 2 )
    num_heads: tuple[ int, ... ] = ( 4, 8, 16, 32 )
    window_size: int = 12
    mlp_ratio: float = 4.0
    attn_temperature_min: float = 0.01
    decoder: DecoderConfig = __.dcls.field( default_factory = DecoderConfig )

    @property
    def stage_count( self ) -> int:
        ''' Number of encoder stages. '''
        return len( self.depths )

    @property
    def output_channels( self ) -> int:
        ''' Channels of the branch output feature map. '''
        if self.decoder.channels: return self.decoder.channels[ -1 ]
        return self.embed_dim

    def stage_channels( self, stage: int ) -> int:
        ''' Channel count of encoder stage. '''
        return self.embed_dim * 2 ** stage

    def stage_grid( self, stage: int ) -> int:
        ''' Token grid extent of encoder stage. '''
        return self.img_size // self.patch_size // 2 ** stage

    def stage_window( self, stage: int ) -> int:
        ''' Attention window of encoder stage.

            Grids no larger than the configured window use one window
            covering the whole grid, without shifting.
        '''
        return min( self.window_size, self.stage_grid( stage ) )


class FcbConfig( __.immut.DataclassObject ):
    ''' Fully convolutional branch widths and depth. '''

    in_channels: int = 3
    widths: tuple[ int, ... ] = ( 64, 128, 256 )
    blocks: int = 2
    groups: int = 32
    out_channels: int = 64


class HeadConfig( __.immut.DataclassObject ):
    ''' Prediction head over fused branch features. '''

    blocks: int = 2
    groups: int = 32


class ModelConfig( __.immut.DataclassObject ):
    ''' Complete architecture of the dual-branch network. '''

    img_size: int = 384
    swin: SwinConfig = __.dcls.field( default_factory = SwinConfig )
    fcb: FcbConfig = __.dcls.field( default_factory = FcbConfig )
    head: HeadConfig = __.dcls.field( default_factory = HeadConfig )

    @property
    def fusion_channels( self ) -> int:
        ''' Channels of each branch at fusion. '''
        return self.swin.output_channels

    def render_as_json( self ) -> dict[ str, __.typx.Any ]:
        ''' Renders configuration as nested JSON-compatible dictionary. '''
        return _render_dataclass( self )


def group_count( channels: int, groups: int ) -> int:
    ''' Largest group count not above request which divides channels. '''
    request = max( 1, min( groups, channels ) )
    return next(
        count for count in range( request, 0, -1 )
        if channels % count == 0 )


def base_config( ) -> ModelConfig:
    ''' SwinV2-Base encoder at 384 pixels with widened FCB. '''
    return ModelConfig( )


def toy_config( ) -> ModelConfig:
    ''' Desk-scale configuration sharing every code path with base scale. '''
    return ModelConfig(
        img_size = 64,
        swin = SwinConfig(
            img_size = 64,
            embed_dim = 8,
            depths = ( 1, 1 ),
            num_heads = ( 2, 4 ),
            window_size = 4,
            decoder = DecoderConfig(
                channels = ( 8, ), groups = 4, scse_reduction = 2 ) ),
        fcb = FcbConfig(
            widths = ( 8, 16 ), blocks = 1, groups = 4, out_channels = 8 ),
        head = HeadConfig( blocks = 2, groups = 4 ) )


def produce_preset( preset: _interfaces.ModelPreset ) -> ModelConfig:
    ''' Returns configuration of named preset. '''
    match preset:
        case _interfaces.ModelPreset.Base: return base_config( )
        case _interfaces.ModelPreset.Toy: return toy_config( )


def validate_model_config( config: ModelConfig ) -> ModelConfig:
    ''' Checks cross-field invariants of model configuration. '''
    swin = config.swin
    if swin.img_size != config.img_size:
        raise __.ModelConfigurationInvalidity(
            'swin.img_size',
            f"{swin.img_size} differs from model size {config.img_size}" )
    if swin.img_size % swin.patch_size:
        raise __.InputIndivisibility(
            ( swin.img_size, swin.img_size ), swin.patch_size )
    if not swin.depths or len( swin.depths ) != len( swin.num_heads ):
        raise __.ModelConfigurationInvalidity(
            'swin.depths', 'depths and num_heads need equal, nonzero length' )
    if any( depth < 1 for depth in swin.depths ):
        raise __.ModelConfigurationInvalidity(
            'swin.depths', 'every stage needs at least one block' )
    if swin.attn_temperature_min <= 0:
        raise __.ModelConfigurationInvalidity(
            'swin.attn_temperature_min', 'must be positive' )
    grid_base = swin.img_size // swin.patch_size
    if grid_base % 2 ** ( swin.stage_count - 1 ):
        raise __.DimensionsOddity( ( grid_base, grid_base ) )
    for stage, heads in enumerate( swin.num_heads ):
        channels = swin.stage_channels( stage )
        if heads < 1 or channels % heads:
            raise __.HeadDivisibility( channels, heads )
        grid = swin.stage_grid( stage )
        window = swin.stage_window( stage )
        if grid % window:
            raise __.FeatureMapIndivisibility( ( grid, grid ), window )
    _validate_decoder( config )
    _validate_fcb( config )
    if config.head.blocks < 1:
        raise __.ModelConfigurationInvalidity(
            'head.blocks', 'at least one residual block is required' )
    return config


def _render_dataclass( value: __.typx.Any ) -> __.typx.Any:
    if __.dcls.is_dataclass( value ) and not isinstance( value, type ):
        return {
            field.name: _render_dataclass( getattr( value, field.name ) )
            for field in __.dcls.fields( value ) }
    if isinstance( value, tuple ):
        return [ _render_dataclass( item ) for item in value ]
    return value


def _validate_decoder( config: ModelConfig ) -> None:
    swin = config.swin
    decoder = swin.decoder
    if len( decoder.channels ) != swin.stage_count - 1:
        raise __.ModelConfigurationInvalidity(
            'swin.decoder.channels',
            f"need {swin.stage_count - 1} widths, one per skip fusion" )
    for channels in decoder.channels:
        if channels < decoder.scse_reduction:
            raise __.ChannelDeficiency( channels, decoder.scse_reduction )
    if decoder.scse_reduction < 1:
        raise __.ModelConfigurationInvalidity(
            'swin.decoder.scse_reduction', 'must be at least 1' )


def _validate_fcb( config: ModelConfig ) -> None:
    fcb = config.fcb
    if not fcb.widths or any( width < 1 for width in fcb.widths ):
        raise __.ModelConfigurationInvalidity(
            'fcb.widths', 'need at least one positive width' )
    if fcb.blocks < 1:
        raise __.ModelConfigurationInvalidity(
            'fcb.blocks', 'at least one residual block per level' )
    if fcb.groups < 1 or config.head.groups < 1:
        raise __.ModelConfigurationInvalidity(
            'groups', 'group counts must be positive' )
    if fcb.out_channels != config.fusion_channels:
        raise __.ModelConfigurationInvalidity(
            'fcb.out_channels',
            f"{fcb.out_channels} differs from transformer branch output "
            f"{config.fusion_channels}" )
