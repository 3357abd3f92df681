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


''' Image and mask file input and output. '''


from PIL import Image as _Image
from torchvision.transforms.v2 import functional as _tvfunc

from . import __
from . import exceptions as _exceptions


def load_image( location: __.Path | str ) -> __.Tensor:
    ''' Loads RGB image as ``3xHxW`` float tensor in ``[0,1]``. '''
    location = __.Path( location )
    try:
        with _Image.open( location ) as image:
            pixels = _tvfunc.pil_to_tensor( image.convert( 'RGB' ) )
    except OSError as exc:
        raise _exceptions.DatasetInaccessibility( location, exc ) from exc
    return _tvfunc.to_dtype( pixels, __.torch.float32, scale = True )


def load_mask( location: __.Path | str ) -> __.Tensor:
    ''' Loads mask as ``1xHxW`` binary float tensor.

        Pixels brighter than half intensity are foreground.
    '''
    location = __.Path( location )
    try:
        with _Image.open( location ) as image:
            pixels = _tvfunc.pil_to_tensor( image.convert( 'L' ) )
    except OSError as exc:
        raise _exceptions.DatasetInaccessibility( location, exc ) from exc
    return ( pixels > 127 ).to( __.torch.float32 )


def save_mask( mask: __.Tensor, location: __.Path | str ) -> __.Path:
    ''' Writes binary mask as PNG with pixel values 0 and 255. '''
    location = __.Path( location )
    location.parent.mkdir( parents = True, exist_ok = True )
    plane = mask.detach( ).reshape( mask.shape[ -2: ] ).to( 'cpu' )
    pixels = ( plane > 0.5 ).to( __.torch.uint8 ).mul( 255 ).numpy( )
    _Image.fromarray( pixels ).save( location, format = 'PNG' )
    return location
