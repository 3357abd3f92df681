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


''' Training loss and per-image overlap metrics.

    The training dice term is smoothed and pooled over the batch. The
    reported metrics are unsmoothed, per image, with explicit conventions
    for empty masks, and are averaged over images.
'''


from . import __
from . import exceptions as _exceptions
from . import results as _results


_scribe = __.acquire_scribe( __name__ )

DICE_SMOOTHING = 1.0


class ImageMetrics( __.immut.DataclassObject ):
    ''' Overlap metrics of one predicted mask against its ground truth. '''

    dice: float
    iou: float
    precision: float
    recall: float
    filename: str = ''

    def render_as_tuple( self ) -> tuple[ float, float, float, float ]:
        ''' Dice, IoU, precision, and recall, in that order. '''
        return self.dice, self.iou, self.precision, self.recall


class MetricsReport( _results.ResultBase ):
    ''' Per-image metrics and their unweighted means. '''

    per_image: tuple[ ImageMetrics, ... ]
    mdice: float
    miou: float
    mprecision: float
    mrecall: float
    threshold: float = 0.5

    def render_as_json( self ) -> __.immut.Dictionary[ str, __.typx.Any ]:
        return __.immut.Dictionary[ str, __.typx.Any ](
            images = len( self.per_image ),
            mdice = self.mdice,
            miou = self.miou,
            mprecision = self.mprecision,
            mrecall = self.mrecall,
            threshold = self.threshold,
        )

    def render_as_markdown(
        self, /, *,
        reveal_internals: bool = False,
    ) -> tuple[ str, ... ]:
        lines = [
            '# Metrics Report',
            '',
            f"**Images:** {len( self.per_image )}",
            f"**Threshold:** {self.threshold}",
            '',
            '| mDice | mIoU | mPrecision | mRecall |',
            '| ---: | ---: | ---: | ---: |',
            f"| {self.mdice:.4f} | {self.miou:.4f} "
            f"| {self.mprecision:.4f} | {self.mrecall:.4f} |",
        ]
        if reveal_internals:
            lines.extend( (
                '',
                '| Image | Dice | IoU | Precision | Recall |',
                '| --- | ---: | ---: | ---: | ---: |' ) )
            lines.extend(
                f"| {metrics.filename} | {metrics.dice:.4f} "
                f"| {metrics.iou:.4f} | {metrics.precision:.4f} "
                f"| {metrics.recall:.4f} |"
                for metrics in self.per_image )
        return tuple( lines )


def bce_dice_loss(
    logits: __.Tensor,
    target: __.Tensor,
    smoothing: float = DICE_SMOOTHING,
) -> __.Tensor:
    ''' Mean binary cross-entropy plus batch-pooled smoothed dice loss. '''
    if logits.shape != target.shape:
        raise _exceptions.ShapeMismatch( logits.shape, target.shape )
    _validate_binary( target )
    target = target.to( logits.dtype )
    bce = __.nnfunc.binary_cross_entropy_with_logits( logits, target )
    probability = __.torch.sigmoid( logits )
    overlap = ( probability * target ).sum( )
    dice = ( 2 * overlap + smoothing ) / (
        probability.sum( ) + target.sum( ) + smoothing )
    return bce + ( 1 - dice )


def binarize( logits: __.Tensor, threshold: float = 0.5 ) -> __.Tensor:
    ''' Foreground wherever probability strictly exceeds threshold.

        Compares in logit space, so threshold 0.5 is exactly the sign test.
    '''
    if not 0 < threshold < 1:
        raise _exceptions.ConfigurationInvalidity(
            'threshold', f"{threshold} lies outside the open unit interval" )
    boundary = __.math.log( threshold / ( 1 - threshold ) )
    return ( logits > boundary ).to( __.torch.float32 )


def image_metrics(
    prediction: __.Tensor, truth: __.Tensor, filename: str = ''
) -> ImageMetrics:
    ''' Dice, IoU, precision, and recall from pixel counts.

        Both masks empty yields ones throughout; any other zero
        denominator yields zero for that metric.
    '''
    if prediction.shape != truth.shape:
        raise _exceptions.ShapeMismatch( truth.shape, prediction.shape )
    _validate_binary( prediction )
    _validate_binary( truth )
    predicted = prediction.bool( )
    actual = truth.bool( )
    tp = int( ( predicted & actual ).sum( ).item( ) )
    fp = int( ( predicted & ~actual ).sum( ).item( ) )
    fn = int( ( ~predicted & actual ).sum( ).item( ) )
    if tp + fp + fn == 0:
        return ImageMetrics(
            dice = 1.0, iou = 1.0, precision = 1.0, recall = 1.0,
            filename = filename )
    return ImageMetrics(
        dice = _ratio( 2 * tp, 2 * tp + fp + fn ),
        iou = _ratio( tp, tp + fp + fn ),
        precision = _ratio( tp, tp + fp ),
        recall = _ratio( tp, tp + fn ),
        filename = filename )


def aggregate(
    per_image: __.cabc.Sequence[ ImageMetrics ], threshold: float = 0.5
) -> MetricsReport:
    ''' Unweighted means over images. '''
    if not per_image: raise _exceptions.MetricsEmptiness( )
    count = len( per_image )
    return MetricsReport(
        per_image = tuple( per_image ),
        mdice = __.math.fsum( item.dice for item in per_image ) / count,
        miou = __.math.fsum( item.iou for item in per_image ) / count,
        mprecision = __.math.fsum(
            item.precision for item in per_image ) / count,
        mrecall = __.math.fsum( item.recall for item in per_image ) / count,
        threshold = threshold )


def write_report(
    report: MetricsReport, directory: __.Path | str
) -> tuple[ __.Path, __.Path ]:
    ''' Writes per-image CSV and aggregate JSON summary.

        Returns locations of both files.
    '''
    directory = __.Path( directory )
    directory.mkdir( parents = True, exist_ok = True )
    table = directory / 'metrics.csv'
    with table.open( 'w', newline = '', encoding = 'utf-8' ) as stream:
        writer = __.csv.writer( stream, lineterminator = '\n' )
        writer.writerow( ( 'filename', 'dice', 'iou', 'precision', 'recall' ) )
        for item in report.per_image:
            writer.writerow( ( item.filename, *item.render_as_tuple( ) ) )
    summary = directory / 'summary.json'
    summary.write_text(
        __.json.dumps(
            dict( report.render_as_json( ) ), indent = 2, sort_keys = True )
        + '\n', encoding = 'utf-8' )
    _scribe.info( f"Wrote metrics for {len( report.per_image )} images "
                  f"to '{directory}'." )
    return table, summary


def _ratio( numerator: int, denominator: int ) -> float:
    if denominator == 0: return 0.0
    return numerator / denominator


def _validate_binary( tensor: __.Tensor ) -> None:
    nonbinary = tensor[ ( tensor != 0 ) & ( tensor != 1 ) ]
    if nonbinary.numel( ):
        values = sorted( set( nonbinary.flatten( )[ :8 ].tolist( ) ) )
        raise _exceptions.TargetNonbinarity( values )
