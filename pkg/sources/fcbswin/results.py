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


''' Results structures.

    Outcomes of training, prediction, and verification runs. Partition,
    leakage, and metrics reports live beside the operations which produce
    them and follow the same rendering protocol.
'''


from . import __


class ResultBase( __.immut.DataclassProtocol, __.typx.Protocol ):
    ''' Base protocol for all result objects with rendering methods. '''

    @__.abc.abstractmethod
    def render_as_json( self ) -> __.immut.Dictionary[ str, __.typx.Any ]:
        ''' Renders result as JSON-compatible dictionary. '''
        raise NotImplementedError

    @__.abc.abstractmethod
    def render_as_markdown(
        self, /, *,
        reveal_internals: bool = False,
    ) -> tuple[ str, ... ]:
        ''' Renders result as Markdown lines for display. '''
        raise NotImplementedError


class EpochRecord( __.immut.DataclassObject ):
    ''' One row of the training log. '''

    epoch: int
    train_loss: float
    val_mdice: float
    learning_rate: float
    checkpointed: bool = False

    def render_as_csv_row( self ) -> str:
        ''' Renders record as row of training log CSV. '''
        return (
            f"{self.epoch},{self.train_loss!r},{self.val_mdice!r},"
            f"{self.learning_rate!r}" )


class TrainingOutcome( ResultBase ):
    ''' Best checkpoint and per-epoch log of a training run. '''

    checkpoint: __.typx.Annotated[
        __.typx.Optional[ __.Path ],
        __.ddoc.Doc( ''' Best weights archive, if any epoch improved. ''' ),
    ]
    log: __.typx.Annotated[
        __.Path, __.ddoc.Doc( ''' Training log CSV. ''' ) ]
    records: tuple[ EpochRecord, ... ]
    parameters_count: int = 0

    @property
    def best_val_mdice( self ) -> float:
        ''' Highest validation mDice over all epochs. '''
        if not self.records: return 0.0
        return max( record.val_mdice for record in self.records )

    def render_as_json( self ) -> __.immut.Dictionary[ str, __.typx.Any ]:
        return __.immut.Dictionary[ str, __.typx.Any ](
            checkpoint = (
                None if self.checkpoint is None else str( self.checkpoint ) ),
            log = str( self.log ),
            epochs = len( self.records ),
            best_val_mdice = self.best_val_mdice,
            parameters_count = self.parameters_count,
            checkpoint_epochs = [
                record.epoch for record in self.records
                if record.checkpointed ],
        )

    def render_as_markdown(
        self, /, *,
        reveal_internals: bool = False,
    ) -> tuple[ str, ... ]:
        lines = [
            '# Training Outcome',
            '',
            f"**Epochs:** {len( self.records )}",
            f"**Best validation mDice:** {self.best_val_mdice:.4f}",
            f"**Checkpoint:** `{self.checkpoint}`",
            f"**Log:** `{self.log}`",
        ]
        if reveal_internals:
            lines.append( f"**Parameters:** {self.parameters_count:,}" )
        return tuple( lines )


class PredictionOutcome( ResultBase ):
    ''' Masks written by a prediction run. '''

    masks: tuple[ __.Path, ... ]
    threshold: float
    native_resolution: bool

    def render_as_json( self ) -> __.immut.Dictionary[ str, __.typx.Any ]:
        return __.immut.Dictionary[ str, __.typx.Any ](
            masks = [ str( mask ) for mask in self.masks ],
            threshold = self.threshold,
            native_resolution = self.native_resolution,
        )

    def render_as_markdown(
        self, /, *,
        reveal_internals: bool = False,
    ) -> tuple[ str, ... ]:
        lines = [
            '# Prediction Outcome',
            '',
            f"**Masks written:** {len( self.masks )}",
            f"**Threshold:** {self.threshold}",
        ]
        if reveal_internals:
            lines.extend( f"- `{mask}`" for mask in self.masks )
        return tuple( lines )


class GradientCheck( __.immut.DataclassObject ):
    ''' Result of one finite-difference comparison. '''

    name: str
    passed: bool
    relative_tolerance: float
    error_relative_max: float
    coordinates_count: int
    coordinates_skipped: int = 0


class VerificationReport( ResultBase ):
    ''' Results of the finite-difference gradient suite. '''

    checks: tuple[ GradientCheck, ... ]

    @property
    def passed( self ) -> bool:
        ''' Whether every check passed. '''
        return all( check.passed for check in self.checks )

    def render_as_json( self ) -> __.immut.Dictionary[ str, __.typx.Any ]:
        return __.immut.Dictionary[ str, __.typx.Any ](
            passed = self.passed,
            checks = [
                dict(
                    name = check.name,
                    passed = check.passed,
                    relative_tolerance = check.relative_tolerance,
                    error_relative_max = check.error_relative_max,
                    coordinates_count = check.coordinates_count,
                    coordinates_skipped = check.coordinates_skipped )
                for check in self.checks ],
        )

    def render_as_markdown(
        self, /, *,
        reveal_internals: bool = False,
    ) -> tuple[ str, ... ]:
        verdict = 'passed' if self.passed else 'FAILED'
        lines = [ f"# Gradient Check: {verdict}", '' ]
        for check in self.checks:
            mark = 'ok' if check.passed else 'FAIL'
            line = (
                f"- **{check.name}**: {mark} "
                f"(max relative error {check.error_relative_max:.3e}, "
                f"tolerance {check.relative_tolerance:.0e})" )
            if reveal_internals:
                line += (
                    f" [{check.coordinates_count} coordinates, "
                    f"{check.coordinates_skipped} skipped at kinks]" )
            lines.append( line )
        return tuple( lines )
