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


''' Training-time augmentation and input normalization.

    Every random draw comes from a :class:`SampleRng` keyed by global seed,
    epoch, and sample index, so an augmented pair depends only on its key
    and never on worker scheduling.
'''


from torchvision.transforms.v2 import InterpolationMode as _Interpolation
from torchvision.transforms.v2 import functional as _tvfunc

from . import __
from . import exceptions as _exceptions
from . import randomness as _randomness


Range: __.typx.TypeAlias = tuple[ float, float ]


class AugmentConfig( __.immut.DataclassObject ):
    ''' Ranges of the training augmentations. '''

    flip_prob: float = 0.5
    scale_range: Range = ( 0.5, 1.5 )
    shear_deg: Range = ( -22.5, 22.5 )
    translate_px: Range = ( -48.0, 48.0 )
    rotate_deg: Range = ( -180.0, 180.0 )
    brightness: Range = ( 0.6, 1.4 )
    contrast: Range = ( 0.5, 1.5 )
    saturation: Range = ( 0.75, 1.25 )
    hue_factor: Range = ( 0.99, 1.01 )
    blur_kernel: int = 25
    blur_sigma: Range = ( 0.001, 2.0 )
    normalize_interval: Range = ( -1.0, 1.0 )


def validate_augment_config( config: AugmentConfig ) -> AugmentConfig:
    ''' Checks range ordering, kernel oddity, and flip probability. '''
    for name in (
        'scale_range', 'shear_deg', 'translate_px', 'rotate_deg',
        'brightness', 'contrast', 'saturation', 'hue_factor',
        'blur_sigma', 'normalize_interval',
    ):
        low, high = getattr( config, name )
        if not low <= high:
            raise _exceptions.ConfigurationInvalidity(
                f"augment.{name}", f"lower bound {low} exceeds {high}" )
    if config.blur_kernel < 1 or config.blur_kernel % 2 == 0:
        raise _exceptions.ConfigurationInvalidity(
            'augment.blur_kernel', 'must be a positive odd integer' )
    if not 0.0 <= config.flip_prob <= 1.0:
        raise _exceptions.ConfigurationInvalidity(
            'augment.flip_prob', 'must lie in [0, 1]' )
    if config.blur_sigma[ 0 ] <= 0.0:
        raise _exceptions.ConfigurationInvalidity(
            'augment.blur_sigma', 'must be positive' )
    if tuple( config.normalize_interval ) != ( -1.0, 1.0 ):
        raise _exceptions.ConfigurationInvalidity(
            'augment.normalize_interval', 'only [-1, 1] is supported' )
    return config


class SampleRng:
    ''' Stream of draws keyed by seed, epoch, and sample index. '''

    def __init__( self, key: int ) -> None:
        self.key = key
        self.generator = __.torch.Generator( ).manual_seed( key )

    @classmethod
    def derive(
        cls, global_seed: int, epoch: int, sample_index: int
    ) -> __.typx.Self:
        ''' Produces stream for one sample of one epoch. '''
        return cls( _randomness.derive_key(
            global_seed, epoch, sample_index ) )

    def chance( self, probability: float ) -> bool:
        ''' Draws Bernoulli outcome. '''
        return self._draw( ) < probability

    def uniform( self, bounds: Range ) -> float:
        ''' Draws uniformly from closed range. '''
        low, high = bounds
        return low + ( high - low ) * self._draw( )

    def _draw( self ) -> float:
        return __.torch.rand(
            ( ), generator = self.generator, dtype = __.torch.float64 ).item( )


class GeometricParameters( __.immut.DataclassObject ):
    ''' One sampled geometric transform. '''

    flip_horizontal: bool = False
    flip_vertical: bool = False
    scale: float = 1.0
    shear: float = 0.0
    rotate: float = 0.0
    translate: tuple[ float, float ] = ( 0.0, 0.0 )

    @property
    def is_affine_identity( self ) -> bool:
        ''' Whether affine part leaves pixels untouched. '''
        return (
            self.scale == 1.0 and self.shear == 0.0 and self.rotate == 0.0
            and self.translate == ( 0.0, 0.0 ) )


class ColorParameters( __.immut.DataclassObject ):
    ''' One sampled color jitter and blur. '''

    brightness: float = 1.0
    contrast: float = 1.0
    saturation: float = 1.0
    hue: float = 1.0
    sigma: float = 0.0


def sample_geometric(
    rng: SampleRng, config: AugmentConfig
) -> GeometricParameters:
    ''' Draws flips, then scale, shear, rotation, and translation. '''
    flip_horizontal = rng.chance( config.flip_prob )
    flip_vertical = rng.chance( config.flip_prob )
    scale = rng.uniform( config.scale_range )
    shear = rng.uniform( config.shear_deg )
    rotate = rng.uniform( config.rotate_deg )
    translate = (
        rng.uniform( config.translate_px ),
        rng.uniform( config.translate_px ) )
    return GeometricParameters(
        flip_horizontal = flip_horizontal, flip_vertical = flip_vertical,
        scale = scale, shear = shear, rotate = rotate, translate = translate )


def sample_color( rng: SampleRng, config: AugmentConfig ) -> ColorParameters:
    ''' Draws brightness, contrast, saturation, hue, then blur sigma. '''
    brightness = rng.uniform( config.brightness )
    contrast = rng.uniform( config.contrast )
    saturation = rng.uniform( config.saturation )
    hue = rng.uniform( config.hue_factor )
    sigma = rng.uniform( config.blur_sigma )
    return ColorParameters(
        brightness = brightness, contrast = contrast,
        saturation = saturation, hue = hue, sigma = sigma )


def apply_geometric(
    image: __.Tensor, mask: __.Tensor, parameters: GeometricParameters
) -> __.TensorPair:
    ''' Applies one geometric transform to both image and mask.

        Flips are exact index permutations. The affine part is a single
        matrix, sampled bilinearly for the image and by nearest neighbor
        for the mask, with zero fill outside the source.
    '''
    _validate_pair( image, mask )
    if parameters.flip_horizontal:
        image = _tvfunc.horizontal_flip( image )
        mask = _tvfunc.horizontal_flip( mask )
    if parameters.flip_vertical:
        image = _tvfunc.vertical_flip( image )
        mask = _tvfunc.vertical_flip( mask )
    if parameters.is_affine_identity: return image.clone( ), mask.clone( )
    nomargs: __.NominativeArguments = dict(
        angle = parameters.rotate,
        translate = list( parameters.translate ),
        scale = parameters.scale,
        shear = [ parameters.shear, 0.0 ],
        fill = 0.0 )
    image = _tvfunc.affine(
        image, interpolation = _Interpolation.BILINEAR, **nomargs )
    mask = _tvfunc.affine(
        mask, interpolation = _Interpolation.NEAREST, **nomargs )
    return image, mask


def apply_color(
    image: __.Tensor, parameters: ColorParameters, blur_kernel: int = 25
) -> __.Tensor:
    ''' Applies jitter in fixed order, then Gaussian blur, then clamps. '''
    image = _tvfunc.adjust_brightness( image, parameters.brightness )
    image = _tvfunc.adjust_contrast( image, parameters.contrast )
    image = _tvfunc.adjust_saturation( image, parameters.saturation )
    image = scale_hue( image, parameters.hue )
    if parameters.sigma > 0.0:
        kernel = min(
            blur_kernel, 2 * min( image.shape[ -2: ] ) - 1 ) | 1
        image = _tvfunc.gaussian_blur(
            image, [ kernel, kernel ],
            [ parameters.sigma, parameters.sigma ] )
    return image.clamp( 0.0, 1.0 )


def geometric_augment(
    image: __.Tensor,
    mask: __.Tensor,
    rng: SampleRng,
    config: AugmentConfig,
) -> __.TensorPair:
    ''' Samples and applies one geometric transform to image and mask. '''
    _validate_pair( image, mask )
    return apply_geometric( image, mask, sample_geometric( rng, config ) )


def color_augment(
    image: __.Tensor, rng: SampleRng, config: AugmentConfig
) -> __.Tensor:
    ''' Samples and applies color jitter and blur. Masks are untouched. '''
    return apply_color(
        image, sample_color( rng, config ), config.blur_kernel )


def normalize( image: __.Tensor ) -> __.Tensor:
    ''' Maps ``[0,1]`` to ``[-1,1]``. '''
    return image * 2.0 - 1.0


def resize_pair(
    image: __.Tensor, mask: __.Tensor, size: __.Spatial = ( 384, 384 )
) -> __.TensorPair:
    ''' Resizes image bilinearly and mask by nearest neighbor. '''
    if 0 in size: raise _exceptions.DimensionZero( size )
    if 0 in image.shape[ -2: ]:
        raise _exceptions.DimensionZero( tuple( image.shape[ -2: ] ) )
    _validate_pair( image, mask )
    if tuple( image.shape[ -2: ] ) == tuple( size ):
        return image.clone( ), mask.clone( )
    image = _tvfunc.resize(
        image, list( size ),
        interpolation = _Interpolation.BILINEAR, antialias = True )
    mask = _tvfunc.resize(
        mask, list( size ), interpolation = _Interpolation.NEAREST )
    return image, mask


def augment_pair(
    image: __.Tensor,
    mask: __.Tensor,
    rng: SampleRng,
    config: AugmentConfig,
    size: __.Spatial = ( 384, 384 ),
) -> __.TensorPair:
    ''' Training pipeline: resize, geometric, color, normalize. '''
    image, mask = resize_pair( image, mask, size )
    image, mask = geometric_augment( image, mask, rng, config )
    image = color_augment( image, rng, config )
    return normalize( image ), mask


def prepare_evaluation_pair(
    image: __.Tensor, mask: __.Tensor, size: __.Spatial = ( 384, 384 )
) -> __.TensorPair:
    ''' Evaluation pipeline: resize and normalize only. '''
    image, mask = resize_pair( image, mask, size )
    return normalize( image ), mask


def prepare_image(
    image: __.Tensor, size: __.Spatial = ( 384, 384 )
) -> __.Tensor:
    ''' Inference pipeline for image without mask. '''
    if 0 in size: raise _exceptions.DimensionZero( size )
    if 0 in image.shape[ -2: ]:
        raise _exceptions.DimensionZero( tuple( image.shape[ -2: ] ) )
    if tuple( image.shape[ -2: ] ) != tuple( size ):
        image = _tvfunc.resize(
            image, list( size ),
            interpolation = _Interpolation.BILINEAR, antialias = True )
    return normalize( image )


def scale_hue( image: __.Tensor, factor: float ) -> __.Tensor:
    ''' Multiplies HSV hue by factor, wrapping around the color circle. '''
    if factor == 1.0: return image
    hue, saturation, value = _rgb_to_hsv( image ).unbind( -3 )
    hue = ( hue * factor ).remainder( 1.0 )
    return _hsv_to_rgb( __.torch.stack( ( hue, saturation, value ), -3 ) )


def _hsv_to_rgb( image: __.Tensor ) -> __.Tensor:
    hue, saturation, value = image.unbind( -3 )
    sector = __.torch.floor( hue * 6.0 )
    fraction = hue * 6.0 - sector
    sector = sector.to( __.torch.int64 ).remainder( 6 )
    p = value * ( 1.0 - saturation )
    q = value * ( 1.0 - saturation * fraction )
    t = value * ( 1.0 - saturation * ( 1.0 - fraction ) )
    red = __.torch.stack( ( value, q, p, p, t, value ), -3 )
    green = __.torch.stack( ( t, value, value, q, p, p ), -3 )
    blue = __.torch.stack( ( p, p, t, value, value, q ), -3 )
    index = sector.unsqueeze( -3 )
    return __.torch.cat( (
        red.gather( -3, index ),
        green.gather( -3, index ),
        blue.gather( -3, index ) ), -3 )


def _rgb_to_hsv( image: __.Tensor ) -> __.Tensor:
    red, green, blue = image.unbind( -3 )
    value = image.amax( -3 )
    delta = value - image.amin( -3 )
    saturation = __.torch.where(
        value > 0, delta / value.clamp_min( 1e-12 ),
        __.torch.zeros_like( value ) )
    divisor = __.torch.where( delta > 0, delta, __.torch.ones_like( delta ) )
    red_c = ( value - red ) / divisor
    green_c = ( value - green ) / divisor
    blue_c = ( value - blue ) / divisor
    hue = __.torch.where(
        value == red, blue_c - green_c,
        __.torch.where(
            value == green, 2.0 + red_c - blue_c, 4.0 + green_c - red_c ) )
    hue = __.torch.where(
        delta > 0, ( hue / 6.0 ).remainder( 1.0 ),
        __.torch.zeros_like( hue ) )
    return __.torch.stack( ( hue, saturation, value ), -3 )


def _validate_pair( image: __.Tensor, mask: __.Tensor ) -> None:
    if image.shape[ -2: ] != mask.shape[ -2: ]:
        raise _exceptions.ShapeMismatch(
            tuple( image.shape[ -2: ] ), tuple( mask.shape[ -2: ] ) )
