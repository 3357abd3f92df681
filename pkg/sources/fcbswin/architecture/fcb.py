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


''' Fully convolutional branch at full resolution. '''


from . import __
from . import configuration as _configuration


class ResidualBlock( __.nn.Module ):
    ''' Residual block with group-normalized convolutions.

        ``y = proj( x ) + GN2( conv2( relu( GN1( conv1( relu( x ) ) ) ) ) )``
        where ``proj`` is a 1x1 convolution only when channel counts differ.
    '''

    def __init__(
        self, in_channels: int, out_channels: int, groups: int = 32
    ) -> None:
        super( ).__init__( )
        self.in_channels = in_channels
        self.conv1 = __.nn.Conv2d( in_channels, out_channels, 3, padding = 1 )
        self.norm1 = __.nn.GroupNorm(
            _configuration.group_count( out_channels, groups ), out_channels )
        self.conv2 = __.nn.Conv2d(
            out_channels, out_channels, 3, padding = 1 )
        self.norm2 = __.nn.GroupNorm(
            _configuration.group_count( out_channels, groups ), out_channels )
        self.projection = (
            __.nn.Conv2d( in_channels, out_channels, 1 )
            if in_channels != out_channels else None )

    def forward( self, features: __.Tensor ) -> __.Tensor:
        if features.shape[ 1 ] != self.in_channels:
            raise __.ChannelMismatch( self.in_channels, features.shape[ 1 ] )
        branch = self.conv1( __.nnfunc.relu( features ) )
        branch = self.conv2( __.nnfunc.relu( self.norm1( branch ) ) )
        shortcut = (
            features if self.projection is None
            else self.projection( features ) )
        return shortcut + self.norm2( branch )


class ConvolutionalBranch( __.nn.Module ):
    ''' UNet-style encoder-decoder of residual blocks.

        Each encoder level halves resolution with a strided convolution;
        the decoder upsamples, concatenates the matching skip, and fuses
        them with residual blocks. Output keeps input resolution.
    '''

    def __init__( self, config: _configuration.FcbConfig ) -> None:
        super( ).__init__( )
        widths = config.widths
        groups = config.groups
        self.stem = __.nn.Conv2d(
            config.in_channels, widths[ 0 ], 3, padding = 1 )
        self.encoder = __.nn.ModuleList(
            __.nn.Sequential( *(
                ResidualBlock( width, width, groups )
                for _ in range( config.blocks ) ) )
            for width in widths )
        self.downsamples = __.nn.ModuleList(
            __.nn.Conv2d( shallower, deeper, 3, stride = 2, padding = 1 )
            for shallower, deeper in zip( widths[ :-1 ], widths[ 1: ] ) )
        self.decoder = __.nn.ModuleList(
            __.nn.Sequential(
                ResidualBlock( deeper + width, width, groups ),
                *( ResidualBlock( width, width, groups )
                   for _ in range( config.blocks - 1 ) ) )
            for width, deeper in zip( widths[ :-1 ], widths[ 1: ] ) )
        self.output = ResidualBlock( widths[ 0 ], config.out_channels, groups )

    def forward( self, image: __.Tensor ) -> __.Tensor:
        features = self.stem( image )
        skips: list[ __.Tensor ] = [ ]
        for level, blocks in enumerate( self.encoder ):
            if level:
                features = self.downsamples[ level - 1 ]( features )
            features = blocks( features )
            skips.append( features )
        for blocks, skip in zip(
            reversed( self.decoder ), reversed( skips[ :-1 ] )
        ):
            features = __.nnfunc.interpolate(
                features, size = tuple( skip.shape[ -2: ] ),
                mode = 'bilinear', align_corners = False )
            features = blocks( __.torch.cat( ( features, skip ), dim = 1 ) )
        return self.output( features )
