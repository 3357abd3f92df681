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


''' Optimization loop, evaluation, and prediction.

    Training order and augmentation draws are keyed by global seed, epoch,
    and sample index, so a run does not depend on the count of loader
    workers. Setting ``FCB_DETERMINISTIC=1`` additionally pins torch to
    deterministic kernels and a single intra-op thread.
'''


from torch.utils import data as _data

from . import __
from . import architecture as _architecture
from . import augment as _augment
from . import evaluation as _evaluation
from . import exceptions as _exceptions
from . import imagery as _imagery
from . import randomness as _randomness
from . import results as _results


_scribe = __.acquire_scribe( __name__ )

CHECKPOINT_NAME = 'best.weights'
CHECKPOINT_SIDECAR_NAME = 'best.json'
LOG_HEADER = 'epoch,train_loss,val_mdice,lr'
LOG_NAME = 'training.csv'

PathPair: __.typx.TypeAlias = tuple[ __.Path, __.Path ]


class TrainConfig( __.immut.DataclassObject ):
    ''' Optimization recipe. '''

    epochs: int = 200
    batch_size: int = 2
    learning_rate: float = 1e-5
    plateau_factor: float = 0.6
    plateau_patience: int = 10
    plateau_tolerance: float = 1e-8
    weight_decay: float = 1e-2
    betas: tuple[ float, float ] = ( 0.9, 0.999 )
    epsilon: float = 1e-8
    seed: int = 0
    augment: bool = True
    workers: int = 0


def validate_train_config( config: TrainConfig ) -> TrainConfig:
    ''' Checks ranges of optimization recipe. '''
    if config.epochs < 1:
        raise _exceptions.ConfigurationInvalidity(
            'train.epochs', 'must be at least 1' )
    if config.batch_size < 1:
        raise _exceptions.ConfigurationInvalidity(
            'train.batch_size', 'must be at least 1' )
    if config.learning_rate <= 0:
        raise _exceptions.ConfigurationInvalidity(
            'train.learning_rate', 'must be positive' )
    if not 0 < config.plateau_factor < 1:
        raise _exceptions.ConfigurationInvalidity(
            'train.plateau_factor', 'must lie strictly between 0 and 1' )
    if config.plateau_patience < 1:
        raise _exceptions.ConfigurationInvalidity(
            'train.plateau_patience', 'must be at least 1' )
    if config.weight_decay < 0:
        raise _exceptions.ConfigurationInvalidity(
            'train.weight_decay', 'must not be negative' )
    if config.workers < 0:
        raise _exceptions.ConfigurationInvalidity(
            'train.workers', 'must not be negative' )
    return config


class TrainState( __.immut.DataclassObject ):
    ''' Schedule bookkeeping between epochs.

        Optimizer moments live in the optimizer itself.
    '''

    learning_rate: float
    epoch: int = 0
    reductions: int = 0
    best_train_loss: float = __.math.inf
    epochs_since_improvement: int = 0
    best_val_mdice: float = -__.math.inf


def configure_determinism( ) -> bool:
    ''' Pins torch to deterministic kernels when environment requests it.
    '''
    value = __.os.environ.get( __.determinism_variable_name, '' )
    if value.strip( ) != '1': return False
    __.torch.use_deterministic_algorithms( True )
    __.torch.set_num_threads( 1 )
    return True


def produce_optimizer(
    model: __.nn.Module, config: TrainConfig
) -> __.torch.optim.AdamW:
    ''' AdamW with decoupled weight decay over every model parameter. '''
    return __.torch.optim.AdamW(
        model.parameters( ),
        lr = config.learning_rate,
        betas = config.betas,
        eps = config.epsilon,
        weight_decay = config.weight_decay )


def adamw_step(
    optimizer: __.torch.optim.Optimizer, learning_rate: float
) -> None:
    ''' Applies one update at the scheduled learning rate.

        Parameters without gradient are left untouched.
    '''
    for group in optimizer.param_groups: group[ 'lr' ] = learning_rate
    optimizer.step( )


def plateau_schedule(
    state: TrainState, train_loss: float, config: TrainConfig
) -> TrainState:
    ''' Decays learning rate after a run of epochs without improvement.

        Improvement means falling below the best loss by more than the
        tolerance. After each reduction the counter restarts. The rate is
        always the initial rate times the factor raised to the count of
        reductions.
    '''
    if train_loss < state.best_train_loss - config.plateau_tolerance:
        return __.dcls.replace(
            state, best_train_loss = train_loss, epochs_since_improvement = 0 )
    waited = state.epochs_since_improvement + 1
    if waited < config.plateau_patience:
        return __.dcls.replace( state, epochs_since_improvement = waited )
    reductions = state.reductions + 1
    learning_rate = (
        config.learning_rate * config.plateau_factor ** reductions )
    _scribe.info(
        f"Training loss plateaued for {waited} epochs; "
        f"learning rate now {learning_rate:.3e}." )
    return __.dcls.replace(
        state,
        reductions = reductions,
        learning_rate = learning_rate,
        epochs_since_improvement = 0 )


def hash_model_config( config: _architecture.ModelConfig ) -> str:
    ''' SHA-256 of canonical JSON rendering of model configuration. '''
    canonical = __.json.dumps(
        config.render_as_json( ), sort_keys = True, separators = ( ',', ':' ) )
    return __.hashlib.sha256( canonical.encode( ) ).hexdigest( )


class CheckpointKeeper:
    ''' Saves weights whenever validation mDice strictly improves. '''

    def __init__(
        self, directory: __.Path, config: _architecture.ModelConfig
    ) -> None:
        self.directory = directory
        self.config_hash = hash_model_config( config )
        self.best_val_mdice = -__.math.inf
        self.epochs: list[ int ] = [ ]

    @property
    def location( self ) -> __.Path:
        ''' Location of best weights archive. '''
        return self.directory / CHECKPOINT_NAME

    @property
    def sidecar( self ) -> __.Path:
        ''' Location of metadata beside best weights. '''
        return self.directory / CHECKPOINT_SIDECAR_NAME

    @property
    def written( self ) -> bool:
        ''' Whether any checkpoint has been written. '''
        return bool( self.epochs )

    def consider(
        self, epoch: int, val_mdice: float, model: __.nn.Module
    ) -> bool:
        ''' Writes checkpoint if score beats every previous one. '''
        if not val_mdice > self.best_val_mdice: return False
        self.best_val_mdice = val_mdice
        self.epochs.append( epoch )
        _architecture.save_weights( model, self.location )
        metadata = dict(
            epoch = epoch,
            val_mdice = val_mdice,
            config_hash = self.config_hash )
        self.sidecar.write_text(
            __.json.dumps( metadata, indent = 2, sort_keys = True ) + '\n',
            encoding = 'utf-8' )
        _scribe.info(
            f"Checkpointed epoch {epoch} with val_mdice={val_mdice:.6f}." )
        return True


class PairDataset( _data.Dataset[ __.TensorPair ] ):
    ''' Image and mask pairs, augmented per sample key when enabled. '''

    def __init__(
        self,
        pairs: __.cabc.Sequence[ PathPair ],
        size: __.Spatial,
        seed: int = 0,
        augment: __.typx.Optional[ _augment.AugmentConfig ] = None,
    ) -> None:
        self.pairs = tuple( pairs )
        self.size = size
        self.seed = seed
        self.augment = augment
        self.epoch = 0

    def __len__( self ) -> int: return len( self.pairs )

    def __getitem__( self, index: int ) -> __.TensorPair:
        image_location, mask_location = self.pairs[ index ]
        image = _imagery.load_image( image_location )
        mask = _imagery.load_mask( mask_location )
        if self.augment is None:
            return _augment.prepare_evaluation_pair( image, mask, self.size )
        rng = _augment.SampleRng.derive( self.seed, self.epoch, index )
        return _augment.augment_pair(
            image, mask, rng, self.augment, self.size )


class EpochOrderSampler( _data.Sampler[ int ] ):
    ''' Visits samples in a permutation keyed by seed and epoch. '''

    def __init__( self, count: int, seed: int = 0 ) -> None:
        self.count = count
        self.seed = seed
        self.epoch = 0

    def __iter__( self ) -> __.cabc.Iterator[ int ]:
        return iter( _randomness.produce_permutation(
            self.seed, self.epoch, count = self.count ) )

    def __len__( self ) -> int: return self.count


def train(
    model: _architecture.FcbSwin,
    train_pairs: __.cabc.Sequence[ PathPair ],
    val_pairs: __.cabc.Sequence[ PathPair ],
    config: TrainConfig,
    augment: _augment.AugmentConfig,
    directory: __.Path | str,
) -> _results.TrainingOutcome:
    ''' Runs the full optimization loop, checkpointing best weights.

        Each epoch: keyed shuffle, augmented mini-batches, loss, AdamW
        step; then validation mDice, checkpoint on strict improvement,
        plateau schedule, and one log row.
    '''
    validate_train_config( config )
    if not train_pairs: raise _exceptions.PartitionEmptiness( 'train' )
    if not val_pairs: raise _exceptions.PartitionEmptiness( 'val' )
    configure_determinism( )
    directory = __.Path( directory )
    directory.mkdir( parents = True, exist_ok = True )
    size = ( model.config.img_size, model.config.img_size )
    dataset = PairDataset(
        train_pairs, size, config.seed,
        augment if config.augment else None )
    sampler = EpochOrderSampler( len( dataset ), config.seed )
    loader = _data.DataLoader(
        dataset,
        batch_size = config.batch_size,
        sampler = sampler,
        num_workers = config.workers )
    optimizer = produce_optimizer( model, config )
    keeper = CheckpointKeeper( directory, model.config )
    state = TrainState( learning_rate = config.learning_rate )
    log = directory / LOG_NAME
    log.write_text( LOG_HEADER + '\n', encoding = 'utf-8' )
    records: list[ _results.EpochRecord ] = [ ]
    for epoch in range( 1, config.epochs + 1 ):
        dataset.epoch = sampler.epoch = epoch
        train_loss = _train_epoch( model, loader, optimizer, state, epoch )
        report = evaluate( model, val_pairs )
        model.train( )
        checkpointed = keeper.consider( epoch, report.mdice, model )
        record = _results.EpochRecord(
            epoch = epoch,
            train_loss = train_loss,
            val_mdice = report.mdice,
            learning_rate = state.learning_rate,
            checkpointed = checkpointed )
        records.append( record )
        with log.open( 'a', encoding = 'utf-8' ) as stream:
            stream.write( record.render_as_csv_row( ) + '\n' )
        __.summarize_epoch(
            _scribe, epoch, train_loss, report.mdice, state.learning_rate )
        state = plateau_schedule( state, train_loss, config )
        state = __.dcls.replace(
            state,
            epoch = epoch,
            best_val_mdice = max( state.best_val_mdice, report.mdice ) )
    return _results.TrainingOutcome(
        checkpoint = keeper.location if keeper.written else None,
        log = log,
        records = tuple( records ),
        parameters_count = _architecture.count_parameters( model ) )


def evaluate(
    model: _architecture.FcbSwin,
    pairs: __.cabc.Sequence[ PathPair ],
    threshold: float = 0.5,
    native_resolution: bool = False,
) -> _evaluation.MetricsReport:
    ''' Per-image metrics of thresholded predictions.

        By default predictions and resized ground truth are compared at
        model resolution. With native resolution, logits are resized to
        each ground truth's own size instead.
    '''
    if not pairs: raise _exceptions.PartitionEmptiness( 'evaluation' )
    size = ( model.config.img_size, model.config.img_size )
    metrics: list[ _evaluation.ImageMetrics ] = [ ]
    model.eval( )
    with __.torch.inference_mode( ):
        for image_location, mask_location in pairs:
            image = _imagery.load_image( image_location )
            mask = _imagery.load_mask( mask_location )
            prepared, truth = _augment.prepare_evaluation_pair(
                image, mask, size )
            logits = model( prepared.unsqueeze( 0 ) )[ 0 ]
            if native_resolution:
                logits = _resize_logits( logits, tuple( mask.shape[ -2: ] ) )
                truth = mask
            prediction = _evaluation.binarize( logits, threshold )
            metrics.append( _evaluation.image_metrics(
                prediction, truth, filename = image_location.name ) )
    return _evaluation.aggregate( metrics, threshold )


def predict(
    model: _architecture.FcbSwin,
    images: __.cabc.Sequence[ __.Path ],
    directory: __.Path | str,
    threshold: float = 0.5,
    native_resolution: bool = False,
) -> _results.PredictionOutcome:
    ''' Writes one binary PNG mask per image, named by image stem. '''
    directory = __.Path( directory )
    size = ( model.config.img_size, model.config.img_size )
    masks: list[ __.Path ] = [ ]
    model.eval( )
    with __.torch.inference_mode( ):
        for location in images:
            image = _imagery.load_image( location )
            prepared = _augment.prepare_image( image, size )
            logits = model( prepared.unsqueeze( 0 ) )[ 0 ]
            if native_resolution:
                logits = _resize_logits( logits, tuple( image.shape[ -2: ] ) )
            masks.append( _imagery.save_mask(
                _evaluation.binarize( logits, threshold ),
                directory / f"{location.stem}.png" ) )
    _scribe.info( f"Wrote {len( masks )} masks to '{directory}'." )
    return _results.PredictionOutcome(
        masks = tuple( masks ),
        threshold = threshold,
        native_resolution = native_resolution )


def _resize_logits(
    logits: __.Tensor, size: tuple[ int, ... ]
) -> __.Tensor:
    if tuple( logits.shape[ -2: ] ) == size: return logits
    return __.nnfunc.interpolate(
        logits.unsqueeze( 0 ), size = size,
        mode = 'bilinear', align_corners = False )[ 0 ]


def _train_epoch(
    model: __.nn.Module,
    loader: _data.DataLoader[ __.TensorPair ],
    optimizer: __.torch.optim.Optimizer,
    state: TrainState,
    epoch: int,
) -> float:
    model.train( )
    losses: list[ float ] = [ ]
    samples = 0
    for step, ( images, masks ) in enumerate( loader, start = 1 ):
        optimizer.zero_grad( set_to_none = True )
        loss = _evaluation.bce_dice_loss( model( images ), masks )
        value = loss.item( )
        if not __.math.isfinite( value ):
            raise _exceptions.LossNonfiniteness( epoch, step, value )
        loss.backward( )
        adamw_step( optimizer, state.learning_rate )
        losses.append( value * images.shape[ 0 ] )
        samples += images.shape[ 0 ]
    return __.math.fsum( losses ) / samples
