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


''' Named-tensor archive.

    Layout: 8-byte little-endian header length; UTF-8 JSON manifest
    ``{ name: { dtype, shape, byte_offset } }`` space-padded so the data
    section starts on a 64-byte boundary; then raw little-endian tensor
    data, each tensor at a 64-byte aligned offset from data start.
'''


from . import __


_ALIGNMENT = 64
_LENGTH_FORMAT = '<Q'
_LENGTH_SIZE = __.struct.calcsize( _LENGTH_FORMAT )

_dtypes_by_code: __.cabc.Mapping[ str, __.torch.dtype ] = (
    __.immut.Dictionary( f32 = __.torch.float32, f64 = __.torch.float64 ) )
_codes_by_dtype: __.cabc.Mapping[ __.torch.dtype, str ] = (
    __.immut.Dictionary( {
        dtype: code for code, dtype in _dtypes_by_code.items( ) } ) )
_numpy_formats: __.cabc.Mapping[ str, str ] = (
    __.immut.Dictionary( f32 = '<f4', f64 = '<f8' ) )


def save_archive(
    tensors: __.cabc.Mapping[ str, __.Tensor ], location: __.Path | str
) -> __.Path:
    ''' Writes named tensors, in sorted name order. '''
    location = __.Path( location )
    manifest: dict[ str, dict[ str, __.typx.Any ] ] = { }
    chunks: list[ bytes ] = [ ]
    offset = 0
    for name in sorted( tensors ):
        tensor = tensors[ name ]
        if tensor.dtype not in _codes_by_dtype:
            raise __.ArchiveCorruption(
                location, f"tensor '{name}' has unsupported {tensor.dtype}" )
        code = _codes_by_dtype[ tensor.dtype ]
        data = (
            tensor.detach( ).to( 'cpu' ).contiguous( ).numpy( )
            .astype( _numpy_formats[ code ], copy = False ).tobytes( ) )
        manifest[ name ] = dict(
            dtype = code, shape = list( tensor.shape ), byte_offset = offset )
        padding = -len( data ) % _ALIGNMENT
        chunks.append( data + b'\0' * padding )
        offset += len( data ) + padding
    header = __.json.dumps(
        manifest, sort_keys = True, separators = ( ',', ':' ) ).encode( )
    header += b' ' * ( -( _LENGTH_SIZE + len( header ) ) % _ALIGNMENT )
    location.parent.mkdir( parents = True, exist_ok = True )
    with location.open( 'wb' ) as stream:
        stream.write( __.struct.pack( _LENGTH_FORMAT, len( header ) ) )
        stream.write( header )
        for chunk in chunks: stream.write( chunk )
    return location


def load_archive(
    location: __.Path | str
) -> dict[ str, __.Tensor ]:
    ''' Reads every named tensor of archive. '''
    location = __.Path( location )
    try: content = location.read_bytes( )
    except OSError as exc:
        raise __.ArchiveCorruption( location, exc ) from exc
    if len( content ) < _LENGTH_SIZE:
        raise __.ArchiveCorruption( location, 'truncated header length' )
    ( length, ) = __.struct.unpack_from( _LENGTH_FORMAT, content )
    start = _LENGTH_SIZE + length
    if start > len( content ):
        raise __.ArchiveCorruption( location, 'truncated manifest' )
    try: manifest = __.json.loads( content[ _LENGTH_SIZE : start ] )
    except ValueError as exc:
        raise __.ArchiveCorruption( location, exc ) from exc
    if not isinstance( manifest, dict ):
        raise __.ArchiveCorruption( location, 'manifest is not an object' )
    manifest_ = __.typx.cast( dict[ str, __.typx.Any ], manifest )
    return {
        name: _extract_tensor( location, content, start, name, entry )
        for name, entry in manifest_.items( ) }


def validate_tensors(
    location: __.Path | str,
    expected: __.cabc.Mapping[ str, tuple[ int, ... ] ],
    tensors: __.cabc.Mapping[ str, __.Tensor ],
) -> None:
    ''' Checks archived names and shapes against expectation.

        Every expected name must be present with its exact shape; names
        without expectation mark the archive as foreign.
    '''
    for name, shape in expected.items( ):
        if name not in tensors: raise __.TensorAbsence( name )
        actual = tuple( tensors[ name ].shape )
        if actual != tuple( shape ):
            raise __.TensorShapeMismatch( name, shape, actual )
    unexpected = sorted( set( tensors ) - set( expected ) )
    if unexpected:
        raise __.ArchiveCorruption(
            location, f"unexpected tensors: {', '.join( unexpected )}" )


def _extract_tensor(
    location: __.Path,
    content: bytes,
    start: int,
    name: str,
    entry: __.typx.Any,
) -> __.Tensor:
    try:
        code = entry[ 'dtype' ]
        shape = tuple( int( extent ) for extent in entry[ 'shape' ] )
        offset = int( entry[ 'byte_offset' ] )
    except ( KeyError, TypeError, ValueError ) as exc:
        raise __.ArchiveCorruption(
            location, f"malformed entry for '{name}'" ) from exc
    if code not in _dtypes_by_code:
        raise __.ArchiveCorruption(
            location, f"tensor '{name}' has unknown dtype {code!r}" )
    if offset < 0 or offset % _ALIGNMENT:
        raise __.ArchiveCorruption(
            location, f"tensor '{name}' has misaligned offset {offset}" )
    count = __.math.prod( shape )
    dtype = __.np.dtype( _numpy_formats[ code ] )
    if start + offset + count * dtype.itemsize > len( content ):
        raise __.ArchiveCorruption(
            location, f"tensor '{name}' extends past end of file" )
    array = __.np.frombuffer(
        content, dtype = dtype, count = count, offset = start + offset )
    return __.torch.from_numpy( array.reshape( shape ).copy( ) ).to(
        _dtypes_by_code[ code ] )
