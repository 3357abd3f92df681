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


''' Named-tensor archive layout and validation. '''


import json
import struct

import pytest
import torch

import fcbswin.architecture.archive as module

from fcbswin import exceptions


def _read_manifest( location ):
    content = location.read_bytes( )
    ( length, ) = struct.unpack_from( '<Q', content )
    return content, length, json.loads( content[ 8 : 8 + length ] )


def test_000_layout_alignment( tmp_path ):
    ''' Data section and every tensor start on 64-byte boundaries. '''
    tensors = {
        'b': torch.arange( 3, dtype = torch.float32 ),
        'a': torch.ones( 2, 5, dtype = torch.float64 ),
    }
    location = module.save_archive( tensors, tmp_path / 'x.weights' )
    content, length, manifest = _read_manifest( location )
    assert ( 8 + length ) % 64 == 0
    assert list( manifest ) == [ 'a', 'b' ]
    assert manifest[ 'a' ] == dict(
        dtype = 'f64', shape = [ 2, 5 ], byte_offset = 0 )
    assert manifest[ 'b' ][ 'byte_offset' ] == 128
    assert len( content ) == 8 + length + 128 + 64


def test_010_values_preserved( tmp_path ):
    ''' Loaded tensors keep values, dtype, and shape. '''
    tensors = {
        'weight': torch.randn( 3, 4 ),
        'scalar': torch.tensor( 2.5, dtype = torch.float64 ),
    }
    location = module.save_archive( tensors, tmp_path / 'x.weights' )
    loaded = module.load_archive( location )
    assert set( loaded ) == set( tensors )
    for name, tensor in tensors.items( ):
        assert loaded[ name ].dtype == tensor.dtype
        assert torch.equal( loaded[ name ], tensor )


def test_020_rejects_unsupported_dtype( tmp_path ):
    ''' Only 32-bit and 64-bit floats are archived. '''
    with pytest.raises( exceptions.ArchiveCorruption ):
        module.save_archive(
            { 'index': torch.arange( 3 ) }, tmp_path / 'x.weights' )


def test_100_rejects_missing_file( tmp_path ):
    ''' Unreadable archives are corrupt. '''
    with pytest.raises( exceptions.ArchiveCorruption ):
        module.load_archive( tmp_path / 'absent.weights' )


def test_110_rejects_truncation( tmp_path ):
    ''' Truncated header or data is detected. '''
    location = module.save_archive(
        { 'w': torch.ones( 32 ) }, tmp_path / 'x.weights' )
    content = location.read_bytes( )
    location.write_bytes( content[ :4 ] )
    with pytest.raises( exceptions.ArchiveCorruption ):
        module.load_archive( location )
    location.write_bytes( content[ :40 ] )
    with pytest.raises( exceptions.ArchiveCorruption ):
        module.load_archive( location )
    location.write_bytes( content[ :-16 ] )
    with pytest.raises( exceptions.ArchiveCorruption ):
        module.load_archive( location )


def test_120_rejects_malformed_manifest( tmp_path ):
    ''' Manifest must be JSON object with aligned, typed entries. '''
    location = tmp_path / 'x.weights'
    for manifest in (
        b'not json',
        b'[1, 2]',
        json.dumps( { 'w': { 'dtype': 'i8', 'shape': [ 1 ],
                             'byte_offset': 0 } } ).encode( ),
        json.dumps( { 'w': { 'dtype': 'f32', 'shape': [ 1 ],
                             'byte_offset': 4 } } ).encode( ),
        json.dumps( { 'w': { 'dtype': 'f32' } } ).encode( ),
    ):
        location.write_bytes(
            struct.pack( '<Q', len( manifest ) ) + manifest + b'\0' * 64 )
        with pytest.raises( exceptions.ArchiveCorruption ):
            module.load_archive( location )


def test_200_validate_tensors( ):
    ''' Expected names need exact shapes; extra names are foreign. '''
    expected = { 'w': ( 2, 3 ), 'b': ( 3, ) }
    good = { 'w': torch.zeros( 2, 3 ), 'b': torch.zeros( 3 ) }
    module.validate_tensors( 'x', expected, good )
    with pytest.raises( exceptions.TensorAbsence ):
        module.validate_tensors( 'x', expected, { 'w': good[ 'w' ] } )
    with pytest.raises( exceptions.TensorShapeMismatch ):
        module.validate_tensors(
            'x', expected, { **good, 'b': torch.zeros( 4 ) } )
    with pytest.raises( exceptions.ArchiveCorruption ):
        module.validate_tensors(
            'x', expected, { **good, 'c': torch.zeros( 1 ) } )
