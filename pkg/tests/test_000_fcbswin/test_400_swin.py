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


''' Transformer branch: windowed cosine attention encoder and decoder. '''


import pytest
import torch

import fcbswin.architecture.swin as module

from fcbswin import architecture
from fcbswin import exceptions


@pytest.fixture( autouse = True )
def _seeded( ):
    torch.manual_seed( 0 )


def test_000_window_round_trip( ):
    ''' Partitioning then reversing restores features. '''
    features = torch.randn( 2, 8, 12, 3 )
    windows = module.window_partition( features, 4 )
    assert windows.shape == ( 2 * 2 * 3, 16, 3 )
    assert torch.equal( module.window_reverse( windows, 4, 8, 12 ), features )


def test_010_window_partition_content( ):
    ''' Each window holds a contiguous block in row-major order. '''
    features = torch.arange( 16.0 ).view( 1, 4, 4, 1 )
    windows = module.window_partition( features, 2 )
    assert windows[ 0 ].flatten( ).tolist( ) == [ 0.0, 1.0, 4.0, 5.0 ]
    assert windows[ 1 ].flatten( ).tolist( ) == [ 2.0, 3.0, 6.0, 7.0 ]


def test_020_window_rejects_indivisible( ):
    ''' Feature maps must tile into whole windows. '''
    with pytest.raises( exceptions.FeatureMapIndivisibility ):
        module.window_partition( torch.zeros( 1, 6, 8, 2 ), 4 )
    with pytest.raises( exceptions.FeatureMapIndivisibility ):
        module.window_reverse( torch.zeros( 4, 16, 2 ), 4, 6, 8 )


def test_100_relative_position_index( ):
    ''' Index covers the bias table and depends only on displacement. '''
    window = 3
    index = module.produce_relative_position_index( window )
    assert index.shape == ( 9, 9 )
    assert index.min( ) >= 0
    assert index.max( ) < ( 2 * window - 1 ) ** 2
    center = ( window - 1 ) * ( 2 * window - 1 ) + ( window - 1 )
    assert ( index.diagonal( ) == center ).all( )
    assert index[ 0, 1 ] == index[ 3, 4 ]
    assert index[ 0, 1 ] != index[ 1, 0 ]


def test_110_shift_mask( ):
    ''' Mask blocks attention only across wrapped regions. '''
    mask = module.produce_shift_mask( 8, 8, 4, 2 )
    assert mask.shape == ( 4, 16, 16 )
    assert ( mask[ 0 ] == 0 ).all( )
    assert ( mask[ 3 ] == -100.0 ).any( )
    assert torch.equal( mask, mask.transpose( 1, 2 ) )
    assert ( mask.diagonal( dim1 = 1, dim2 = 2 ) == 0 ).all( )


def test_200_cosine_weights_normalized( ):
    ''' Rows sum to one and ignore query and key magnitudes. '''
    query = torch.randn( 2, 2, 4, 3 )
    key = torch.randn( 2, 2, 4, 3 )
    temperature = torch.tensor( [ 0.1, 0.5 ] )
    weights = module.scaled_cosine_weights( query, key, temperature )
    assert torch.allclose( weights.sum( -1 ), torch.ones( 2, 2, 4 ) )
    scaled = module.scaled_cosine_weights( query * 7, key * 0.2, temperature )
    assert torch.allclose( weights, scaled, atol = 1e-6 )


def test_210_cosine_weights_masked( ):
    ''' Masked pairs receive negligible weight. '''
    mask = module.produce_shift_mask( 8, 8, 4, 2 )
    query = torch.randn( 4, 1, 16, 2 )
    key = torch.randn( 4, 1, 16, 2 )
    weights = module.scaled_cosine_weights(
        query, key, torch.tensor( [ 1.0 ] ), mask = mask )
    blocked = mask.unsqueeze( 1 ) < 0
    assert weights[ blocked ].max( ) < 1e-30


def test_300_window_attention_shape( ):
    ''' Attention preserves token shape and initial temperature. '''
    attention = module.WindowAttention( 8, 2, 4 )
    tokens = torch.randn( 3, 16, 8 )
    assert attention( tokens ).shape == ( 3, 16, 8 )
    assert torch.allclose( attention.temperature, torch.full( ( 2, ), 0.1 ) )
    assert attention.produce_bias( ).shape == ( 2, 16, 16 )


def test_310_window_attention_temperature_floor( ):
    ''' Temperature never falls below its minimum. '''
    attention = module.WindowAttention( 8, 2, 4, temperature_min = 0.01 )
    with torch.no_grad( ): attention.log_temperature.fill_( -20.0 )
    assert torch.allclose(
        attention.temperature, torch.full( ( 2, ), 0.01 ) )


def test_320_window_attention_rejects( ):
    ''' Heads must divide channels; tokens must match window and width. '''
    with pytest.raises( exceptions.HeadDivisibility ):
        module.WindowAttention( 10, 3, 4 )
    attention = module.WindowAttention( 8, 2, 4 )
    with pytest.raises( exceptions.ChannelMismatch ):
        attention( torch.randn( 1, 16, 6 ) )
    with pytest.raises( exceptions.ShapeMismatch ):
        attention( torch.randn( 1, 9, 8 ) )


def test_330_position_index_not_persisted( ):
    ''' Index buffer is rebuilt, never archived. '''
    attention = module.WindowAttention( 8, 2, 4 )
    assert 'position_index' not in attention.state_dict( )
    assert 'position_bias' in attention.state_dict( )


def test_400_swin_block_shapes( ):
    ''' Blocks preserve shape; shifting changes the result. '''
    plain = module.SwinBlock( 8, 2, 4 )
    shifted = module.SwinBlock( 8, 2, 4, shift = 2 )
    shifted.load_state_dict( plain.state_dict( ) )
    features = torch.randn( 2, 8, 8, 8 )
    assert plain( features ).shape == features.shape
    assert not torch.allclose( plain( features ), shifted( features ) )


def test_410_swin_block_rejects_indivisible( ):
    ''' Grid must tile into windows. '''
    block = module.SwinBlock( 8, 2, 4 )
    with pytest.raises( exceptions.FeatureMapIndivisibility ):
        block( torch.randn( 1, 6, 8, 8 ) )


@pytest.mark.parametrize( 'shift', ( 0, 2 ) )
def test_420_swin_block_zero_branches_identity( shift ):
    ''' Zeroed branch outputs leave post-normalized residuals exact. '''
    block = module.SwinBlock( 8, 2, 4, shift = shift )
    with torch.no_grad( ):
        for layer in ( block.attention.projection, block.mlp[ -1 ] ):
            layer.weight.zero_( )
            layer.bias.zero_( )
    features = torch.randn( 2, 8, 8, 8 )
    assert torch.equal( block( features ), features )


def test_430_patch_embedding( ):
    ''' Patches become normalized tokens on a quarter grid. '''
    embedding = module.PatchEmbedding( 4, 3, 8 )
    assert embedding( torch.randn( 1, 3, 16, 8 ) ).shape == ( 1, 4, 2, 8 )
    with pytest.raises( exceptions.InputIndivisibility ):
        embedding( torch.randn( 1, 3, 18, 16 ) )


def test_440_patch_embedding_base_scale( ):
    ''' Base-scale embedding yields a 96x96 grid of 9216 tokens. '''
    config = architecture.base_config( ).swin
    embedding = module.PatchEmbedding(
        config.patch_size, config.in_channels, config.embed_dim )
    with torch.no_grad( ):
        tokens = embedding( torch.randn( 1, 3, 384, 384 ) )
    assert tokens.shape == ( 1, 96, 96, config.embed_dim )
    assert tokens.shape[ 1 ] * tokens.shape[ 2 ] == 9216


def test_450_patch_merging( ):
    ''' Merging halves the grid and doubles channels. '''
    merging = module.PatchMerging( 4 )
    assert merging( torch.randn( 2, 4, 6, 4 ) ).shape == ( 2, 2, 3, 8 )
    with pytest.raises( exceptions.DimensionsOddity ):
        merging( torch.randn( 1, 3, 4, 4 ) )


def test_500_encoder_skips( ):
    ''' Toy encoder yields one channels-first skip per stage. '''
    config = architecture.toy_config( ).swin
    skips, bottleneck = module.SwinEncoder( config )(
        torch.randn( 1, 3, 64, 64 ) )
    assert [ tuple( skip.shape ) for skip in skips ] == [
        ( 1, 8, 16, 16 ), ( 1, 16, 8, 8 ) ]
    assert bottleneck is skips[ -1 ]


def test_510_stage_shift_policy( ):
    ''' Odd blocks shift by half a window unless one window covers grid. '''
    config = architecture.SwinConfig(
        img_size = 32, embed_dim = 8, depths = ( 2, 2 ),
        num_heads = ( 2, 2 ), window_size = 4,
        decoder = architecture.DecoderConfig(
            channels = ( 8, ), groups = 4, scse_reduction = 2 ) )
    wide = module.SwinStage( config, 0 )
    assert [ block.shift for block in wide.blocks ] == [ 0, 2 ]
    assert wide.downsample is None
    narrow = module.SwinStage( config, 1 )
    assert [ block.shift for block in narrow.blocks ] == [ 0, 0 ]
    assert narrow.downsample is not None


def test_600_scse( ):
    ''' Recalibration preserves shape; reduction must fit channels. '''
    scse = module.Scse( 8, 2 )
    assert scse( torch.randn( 1, 8, 5, 5 ) ).shape == ( 1, 8, 5, 5 )
    with pytest.raises( exceptions.ChannelDeficiency ):
        module.Scse( 4, 8 )
    with pytest.raises( exceptions.ChannelMismatch ):
        scse( torch.randn( 1, 4, 5, 5 ) )


def test_610_scse_zero_input( ):
    ''' Zero features stay zero under gating. '''
    scse = module.Scse( 8, 2 )
    zeros = torch.zeros( 1, 8, 3, 3 )
    assert torch.equal( scse( zeros ), zeros )


def test_620_scse_saturated_gates_double( ):
    ''' Both gates saturated open yield twice the input. '''
    scse = module.Scse( 8, 2 )
    with torch.no_grad( ):
        for gate in ( scse.channel_gate[ 3 ], scse.spatial_gate[ 0 ] ):
            gate.weight.zero_( )
            gate.bias.fill_( 50.0 )
    features = torch.randn( 2, 8, 5, 5 )
    assert torch.allclose( scse( features ), 2 * features )


def test_700_decoder_block( ):
    ''' Decoder upsamples onto skip grid and applies recalibration. '''
    block = module.DecoderBlock( 8, 4, 6, groups = 4, reduction = 2 )
    output = block( torch.randn( 1, 8, 2, 2 ), torch.randn( 1, 4, 4, 4 ) )
    assert output.shape == ( 1, 6, 4, 4 )
    same = block( torch.randn( 1, 8, 4, 4 ), torch.randn( 1, 4, 4, 4 ) )
    assert same.shape == ( 1, 6, 4, 4 )


def test_710_decoder_block_rejects( ):
    ''' Skips must match or double the grid and channel counts must fit. '''
    block = module.DecoderBlock( 8, 4, 6, groups = 4, reduction = 2 )
    with pytest.raises( exceptions.SkipIncompatibility ):
        block( torch.randn( 1, 8, 2, 2 ), torch.randn( 1, 4, 5, 5 ) )
    with pytest.raises( exceptions.ChannelMismatch ):
        block( torch.randn( 1, 8, 2, 2 ), torch.randn( 1, 2, 4, 4 ) )


def test_800_transformer_branch( ):
    ''' Toy branch returns decoder features at quarter resolution. '''
    branch = module.TransformerBranch( architecture.toy_config( ).swin )
    assert branch( torch.randn( 2, 3, 64, 64 ) ).shape == ( 2, 8, 16, 16 )


def test_900_import_encoder_weights( tmp_path ):
    ''' Converted encoder tensors load into encoder alone. '''
    config = architecture.toy_config( )
    source = architecture.build_model( config, seed = 1 )
    target = architecture.build_model( config, seed = 2 )
    tensors = {
        f"swin.encoder.{name}": tensor
        for name, tensor in source.swin.encoder.state_dict( ).items( ) }
    location = architecture.save_archive( tensors, tmp_path / 'enc.weights' )
    head_before = target.head.conv_out.weight.clone( )
    count = module.import_encoder_weights( target, location )
    assert count == len( tensors )
    for name, tensor in target.swin.encoder.state_dict( ).items( ):
        assert torch.equal( tensor, source.swin.encoder.state_dict( )[ name ] )
    assert torch.equal( target.head.conv_out.weight, head_before )


def test_910_import_encoder_weights_validates( tmp_path ):
    ''' Missing or misshapen tensors are rejected. '''
    config = architecture.toy_config( )
    model = architecture.build_model( config )
    tensors = {
        f"swin.encoder.{name}": tensor
        for name, tensor in model.swin.encoder.state_dict( ).items( ) }
    name = 'swin.encoder.patch_embed.projection.weight'
    partial = { k: v for k, v in tensors.items( ) if k != name }
    location = architecture.save_archive( partial, tmp_path / 'a.weights' )
    with pytest.raises( exceptions.TensorAbsence ):
        module.import_encoder_weights( model, location )
    misshapen = { **tensors, name: torch.zeros( 1 ) }
    location = architecture.save_archive( misshapen, tmp_path / 'b.weights' )
    with pytest.raises( exceptions.TensorShapeMismatch ):
        module.import_encoder_weights( model, location )
