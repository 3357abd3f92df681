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


''' Transformer branch: SwinV2 encoder with SCSE decoder.

    Encoder features travel as ``BxHxWxC`` tokens; skips leave the encoder
    channels-first, ``BxCxHxW``, as the decoder convolutions expect.
'''


from . import __
from . import archive as _archive
from . import configuration as _configuration


_scribe = __.acquire_scribe( __name__ )

_ENCODER_PREFIX = 'swin.encoder.'
_MASK_FILL = -100.0
_TEMPERATURE_INITIAL = 0.1


def window_partition( features: __.Tensor, window: int ) -> __.Tensor:
    ''' Splits ``BxHxWxC`` features into ``(B*nW)xM²xC`` windows. '''
    batch, height, width, channels = features.shape
    if height % window or width % window:
        raise __.FeatureMapIndivisibility( ( height, width ), window )
    windows = features.reshape(
        batch, height // window, window, width // window, window, channels )
    return windows.permute( 0, 1, 3, 2, 4, 5 ).reshape(
        -1, window * window, channels )


def window_reverse(
    windows: __.Tensor, window: int, height: int, width: int
) -> __.Tensor:
    ''' Reassembles windows into ``BxHxWxC`` features. '''
    if height % window or width % window:
        raise __.FeatureMapIndivisibility( ( height, width ), window )
    channels = windows.shape[ -1 ]
    features = windows.reshape(
        -1, height // window, width // window, window, window, channels )
    return features.permute( 0, 1, 3, 2, 4, 5 ).reshape(
        -1, height, width, channels )


def produce_relative_position_index( window: int ) -> __.Tensor:
    ''' Index into bias table for every token pair of a window. '''
    coordinates = __.torch.stack( __.torch.meshgrid(
        __.torch.arange( window ), __.torch.arange( window ),
        indexing = 'ij' ) ).flatten( 1 )
    relative = coordinates[ :, :, None ] - coordinates[ :, None, : ]
    relative = relative.permute( 1, 2, 0 ).contiguous( )
    relative[ :, :, 0 ] += window - 1
    relative[ :, :, 1 ] += window - 1
    relative[ :, :, 0 ] *= 2 * window - 1
    return relative.sum( -1 )


def produce_shift_mask(
    height: int, width: int, window: int, shift: int, *,
    device: __.torch.device | None = None,
    dtype: __.torch.dtype = __.torch.float32,
) -> __.Tensor:
    ''' Additive mask separating regions which wrapped under cyclic shift.

        Returns ``nW x M² x M²`` with zero within a region and a large
        negative value across regions.
    '''
    regions = __.torch.zeros( ( 1, height, width, 1 ), device = device )
    slices = (
        slice( 0, -window ), slice( -window, -shift ), slice( -shift, None ) )
    label = 0
    for rows in slices:
        for columns in slices:
            regions[ :, rows, columns, : ] = label
            label += 1
    labels = window_partition( regions, window ).squeeze( -1 )
    difference = labels.unsqueeze( 1 ) - labels.unsqueeze( 2 )
    mask = __.torch.zeros_like( difference, dtype = dtype )
    return mask.masked_fill( difference != 0, _MASK_FILL )


def scaled_cosine_weights(
    query: __.Tensor,
    key: __.Tensor,
    temperature: __.Tensor,
    bias: __.Tensor | None = None,
    mask: __.Tensor | None = None,
) -> __.Tensor:
    ''' Attention weights from cosine similarity over temperature.

        Query and key are ``N x heads x T x d``; temperature has one entry
        per head; bias is ``heads x T x T``; mask is ``nW x T x T`` with
        ``N`` a multiple of ``nW``. Rows sum to one.
    '''
    logits = (
        __.nnfunc.normalize( query, dim = -1 )
        @ __.nnfunc.normalize( key, dim = -1 ).transpose( -2, -1 ) )
    logits = logits / temperature.view( 1, -1, 1, 1 )
    if bias is not None: logits = logits + bias.unsqueeze( 0 )
    if mask is not None:
        windows = mask.shape[ 0 ]
        logits = logits.view( -1, windows, *logits.shape[ 1: ] )
        logits = logits + mask.unsqueeze( 1 ).unsqueeze( 0 )
        logits = logits.view( -1, *logits.shape[ 2: ] )
    return logits.softmax( dim = -1 )


class WindowAttention( __.nn.Module ):
    ''' Multi-head scaled cosine attention within windows. '''

    def __init__(
        self,
        dim: int,
        heads: int,
        window: int,
        temperature_min: float = 0.01,
    ) -> None:
        super( ).__init__( )
        if heads < 1 or dim % heads: raise __.HeadDivisibility( dim, heads )
        self.dim = dim
        self.heads = heads
        self.window = window
        self.temperature_min = temperature_min
        self.qkv = __.nn.Linear( dim, dim * 3 )
        self.projection = __.nn.Linear( dim, dim )
        self.log_temperature = __.nn.Parameter(
            __.torch.full( ( heads, ), __.math.log( _TEMPERATURE_INITIAL ) ) )
        self.position_bias = __.nn.Parameter(
            __.torch.zeros( ( 2 * window - 1 ) ** 2, heads ) )
        self.register_buffer(
            'position_index', produce_relative_position_index( window ),
            persistent = False )

    @property
    def temperature( self ) -> __.Tensor:
        ''' Per-head temperature, bounded below. '''
        return __.torch.clamp(
            self.log_temperature,
            min = __.math.log( self.temperature_min ) ).exp( )

    def produce_bias( self ) -> __.Tensor:
        ''' Relative position bias, ``heads x M² x M²``. '''
        area = self.window * self.window
        index = __.typx.cast( __.Tensor, self.position_index )
        bias = self.position_bias[ index.view( -1 ) ]
        return bias.view( area, area, -1 ).permute( 2, 0, 1 ).contiguous( )

    def forward(
        self, tokens: __.Tensor, mask: __.Tensor | None = None
    ) -> __.Tensor:
        count, area, channels = tokens.shape
        if channels != self.dim:
            raise __.ChannelMismatch( self.dim, channels )
        if area != self.window * self.window:
            raise __.ShapeMismatch(
                ( count, self.window * self.window, channels ),
                tuple( tokens.shape ) )
        qkv = self.qkv( tokens ).reshape(
            count, area, 3, self.heads, channels // self.heads )
        query, key, value = qkv.permute( 2, 0, 3, 1, 4 ).unbind( 0 )
        weights = scaled_cosine_weights(
            query, key, self.temperature, self.produce_bias( ), mask )
        attended = ( weights @ value ).transpose( 1, 2 )
        return self.projection( attended.reshape( count, area, channels ) )


class SwinBlock( __.nn.Module ):
    ''' SwinV2 block with residual post-normalization.

        ``x + LN( attention( x ) )`` followed by ``x + LN( MLP( x ) )``.
        A nonzero shift rolls the grid before windowing and masks
        attention across the wrapped borders.
    '''

    def __init__(
        self,
        dim: int,
        heads: int,
        window: int,
        shift: int = 0,
        mlp_ratio: float = 4.0,
        temperature_min: float = 0.01,
    ) -> None:
        super( ).__init__( )
        self.window = window
        self.shift = shift
        self.attention = WindowAttention( dim, heads, window, temperature_min )
        self.norm1 = __.nn.LayerNorm( dim )
        hidden = int( dim * mlp_ratio )
        self.mlp = __.nn.Sequential(
            __.nn.Linear( dim, hidden ),
            __.nn.GELU( ),
            __.nn.Linear( hidden, dim ) )
        self.norm2 = __.nn.LayerNorm( dim )

    def forward( self, features: __.Tensor ) -> __.Tensor:
        _, height, width, _ = features.shape
        if height % self.window or width % self.window:
            raise __.FeatureMapIndivisibility( ( height, width ), self.window )
        shifted = features
        mask = None
        if self.shift:
            shifted = __.torch.roll(
                features, shifts = ( -self.shift, -self.shift ),
                dims = ( 1, 2 ) )
            mask = produce_shift_mask(
                height, width, self.window, self.shift,
                device = features.device, dtype = features.dtype )
        windows = window_partition( shifted, self.window )
        attended = window_reverse(
            self.attention( windows, mask ), self.window, height, width )
        if self.shift:
            attended = __.torch.roll(
                attended, shifts = ( self.shift, self.shift ),
                dims = ( 1, 2 ) )
        features = features + self.norm1( attended )
        return features + self.norm2( self.mlp( features ) )


class PatchEmbedding( __.nn.Module ):
    ''' Linear projection of non-overlapping patches, then LN. '''

    def __init__(
        self, patch_size: int, in_channels: int, dim: int
    ) -> None:
        super( ).__init__( )
        self.patch_size = patch_size
        self.projection = __.nn.Conv2d(
            in_channels, dim, patch_size, stride = patch_size )
        self.norm = __.nn.LayerNorm( dim )

    def forward( self, image: __.Tensor ) -> __.Tensor:
        height, width = image.shape[ -2: ]
        if height % self.patch_size or width % self.patch_size:
            raise __.InputIndivisibility( ( height, width ), self.patch_size )
        return self.norm( self.projection( image ).permute( 0, 2, 3, 1 ) )


class PatchMerging( __.nn.Module ):
    ''' Concatenates 2x2 neighborhoods, normalizes, projects 4C to 2C. '''

    def __init__( self, dim: int ) -> None:
        super( ).__init__( )
        self.norm = __.nn.LayerNorm( 4 * dim )
        self.reduction = __.nn.Linear( 4 * dim, 2 * dim )

    def forward( self, features: __.Tensor ) -> __.Tensor:
        batch, height, width, channels = features.shape
        if height % 2 or width % 2:
            raise __.DimensionsOddity( ( height, width ) )
        features = features.reshape(
            batch, height // 2, 2, width // 2, 2, channels )
        features = features.permute( 0, 1, 3, 4, 2, 5 ).flatten( 3 )
        return self.reduction( self.norm( features ) )


class SwinStage( __.nn.Module ):
    ''' Optional patch merging followed by alternating window blocks. '''

    def __init__(
        self, config: _configuration.SwinConfig, stage: int
    ) -> None:
        super( ).__init__( )
        dim = config.stage_channels( stage )
        window = config.stage_window( stage )
        shift = window // 2 if config.stage_grid( stage ) > window else 0
        self.downsample = PatchMerging( dim // 2 ) if stage else None
        self.blocks = __.nn.ModuleList(
            SwinBlock(
                dim, config.num_heads[ stage ], window,
                shift = shift if index % 2 else 0,
                mlp_ratio = config.mlp_ratio,
                temperature_min = config.attn_temperature_min )
            for index in range( config.depths[ stage ] ) )

    def forward( self, features: __.Tensor ) -> __.Tensor:
        if self.downsample is not None:
            features = self.downsample( features )
        for block in self.blocks: features = block( features )
        return features


class SwinEncoder( __.nn.Module ):
    ''' Hierarchical SwinV2 encoder producing one skip per stage. '''

    def __init__( self, config: _configuration.SwinConfig ) -> None:
        super( ).__init__( )
        self.patch_embed = PatchEmbedding(
            config.patch_size, config.in_channels, config.embed_dim )
        self.stages = __.nn.ModuleList(
            SwinStage( config, stage )
            for stage in range( config.stage_count ) )
        self.norms = __.nn.ModuleList(
            __.nn.LayerNorm( config.stage_channels( stage ) )
            for stage in range( config.stage_count ) )

    def forward(
        self, image: __.Tensor
    ) -> tuple[ list[ __.Tensor ], __.Tensor ]:
        ''' Returns channels-first skips, shallowest first, and bottleneck. '''
        features = self.patch_embed( image )
        skips: list[ __.Tensor ] = [ ]
        for stage, norm in zip( self.stages, self.norms ):
            features = stage( features )
            skips.append(
                norm( features ).permute( 0, 3, 1, 2 ).contiguous( ) )
        return skips, skips[ -1 ]


class Scse( __.nn.Module ):
    ''' Concurrent spatial and channel squeeze and excitation. '''

    def __init__( self, channels: int, reduction: int = 16 ) -> None:
        super( ).__init__( )
        if reduction < 1 or channels < reduction:
            raise __.ChannelDeficiency( channels, reduction )
        self.channels = channels
        squeezed = channels // reduction
        self.channel_gate = __.nn.Sequential(
            __.nn.AdaptiveAvgPool2d( 1 ),
            __.nn.Conv2d( channels, squeezed, 1 ),
            __.nn.ReLU( ),
            __.nn.Conv2d( squeezed, channels, 1 ),
            __.nn.Sigmoid( ) )
        self.spatial_gate = __.nn.Sequential(
            __.nn.Conv2d( channels, 1, 1 ), __.nn.Sigmoid( ) )

    def forward( self, features: __.Tensor ) -> __.Tensor:
        if features.shape[ 1 ] != self.channels:
            raise __.ChannelMismatch( self.channels, features.shape[ 1 ] )
        return (
            features * self.channel_gate( features )
            + features * self.spatial_gate( features ) )


class DecoderBlock( __.nn.Module ):
    ''' Upsample, concatenate skip, two conv-GN-ReLU layers, then SCSE. '''

    def __init__(
        self,
        previous_channels: int,
        skip_channels: int,
        out_channels: int,
        groups: int = 32,
        reduction: int = 16,
    ) -> None:
        super( ).__init__( )
        self.in_channels = previous_channels + skip_channels
        self.conv1 = __.nn.Conv2d(
            self.in_channels, out_channels, 3, padding = 1 )
        self.norm1 = __.nn.GroupNorm(
            _configuration.group_count( out_channels, groups ), out_channels )
        self.conv2 = __.nn.Conv2d( out_channels, out_channels, 3, padding = 1 )
        self.norm2 = __.nn.GroupNorm(
            _configuration.group_count( out_channels, groups ), out_channels )
        self.scse = Scse( out_channels, reduction )

    def forward( self, previous: __.Tensor, skip: __.Tensor ) -> __.Tensor:
        size_previous = tuple( previous.shape[ -2: ] )
        size_skip = tuple( skip.shape[ -2: ] )
        doubled = ( size_previous[ 0 ] * 2, size_previous[ 1 ] * 2 )
        if size_skip not in ( size_previous, doubled ):
            raise __.SkipIncompatibility( size_previous, size_skip )
        channels = previous.shape[ 1 ] + skip.shape[ 1 ]
        if channels != self.in_channels:
            raise __.ChannelMismatch( self.in_channels, channels )
        if size_skip != size_previous:
            previous = __.nnfunc.interpolate(
                previous, size = size_skip,
                mode = 'bilinear', align_corners = False )
        features = __.torch.cat( ( previous, skip ), dim = 1 )
        features = __.nnfunc.relu( self.norm1( self.conv1( features ) ) )
        features = __.nnfunc.relu( self.norm2( self.conv2( features ) ) )
        return self.scse( features )


class TransformerBranch( __.nn.Module ):
    ''' SwinV2 encoder and UNet-style decoder at quarter resolution. '''

    def __init__( self, config: _configuration.SwinConfig ) -> None:
        super( ).__init__( )
        self.encoder = SwinEncoder( config )
        decoder = config.decoder
        previous = config.stage_channels( config.stage_count - 1 )
        blocks: list[ DecoderBlock ] = [ ]
        for index, channels in enumerate( decoder.channels ):
            skip = config.stage_channels( config.stage_count - 2 - index )
            blocks.append( DecoderBlock(
                previous, skip, channels,
                groups = decoder.groups,
                reduction = decoder.scse_reduction ) )
            previous = channels
        self.decoder = __.nn.ModuleList( blocks )

    def forward( self, image: __.Tensor ) -> __.Tensor:
        skips, bottleneck = self.encoder( image )
        features = bottleneck
        for block, skip in zip( self.decoder, reversed( skips[ :-1 ] ) ):
            features = block( features, skip )
        return features


def import_encoder_weights(
    model: __.nn.Module, location: __.Path | str
) -> int:
    ''' Loads externally converted encoder tensors named ``swin.encoder.*``.

        Names and shapes are validated against the encoder; the rest of
        the model is untouched. Returns count of imported tensors.
    '''
    location = __.Path( location )
    encoder = model.get_submodule( 'swin.encoder' )
    tensors = {
        name: tensor for name, tensor
        in _archive.load_archive( location ).items( )
        if name.startswith( _ENCODER_PREFIX ) }
    expected = {
        f"{_ENCODER_PREFIX}{name}": tuple( tensor.shape )
        for name, tensor in encoder.state_dict( ).items( ) }
    _archive.validate_tensors( location, expected, tensors )
    encoder.load_state_dict( {
        name[ len( _ENCODER_PREFIX ): ]: tensor
        for name, tensor in tensors.items( ) } )
    _scribe.info(
        f"Imported {len( tensors )} encoder tensors from '{location}'." )
    return len( tensors )
