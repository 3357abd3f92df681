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


''' Dataset ingestion, partitioning, and leakage auditing. '''


from . import __
from . import exceptions as _exceptions
from . import interfaces as _interfaces
from . import randomness as _randomness
from . import results as _results


_scribe = __.acquire_scribe( __name__ )

_RATIOS_TOLERANCE = 1e-9
_manifest_keys = frozenset( (
    'method', 'provenance', 'train', 'val', 'test' ) )
_provenance_keys = frozenset( (
    'ratios', 'seed', 'val_sequences', 'test_sequences' ) )


Ratios: __.typx.TypeAlias = tuple[ float, float, float ]


def canonical_order( names: __.cabc.Iterable[ str ] ) -> tuple[ str, ... ]:
    ''' Sorts names bytewise-lexicographically on their UTF-8 encoding. '''
    return tuple( sorted( names, key = lambda name: name.encode( 'utf-8' ) ) )


class DatasetIndex( __.immut.DataclassObject ):
    ''' Image and mask pairs of a dataset, in canonical order. '''

    root: __.Path
    kind: _interfaces.DatasetKind
    entries: __.typx.Annotated[
        tuple[ tuple[ str, str ], ... ],
        __.ddoc.Doc( ''' Image and mask paths, relative to root. ''' ),
    ]

    @property
    def image_count( self ) -> int:
        ''' Number of image and mask pairs. '''
        return len( self.entries )

    @property
    def filenames( self ) -> tuple[ str, ... ]:
        ''' Image filenames, in canonical order. '''
        return tuple( __.Path( image ).name for image, _ in self.entries )


class SequenceMap( __.immut.DataclassObject ):
    ''' Assignment of image filenames to video sequences.

        Lookups are by filename stem, so one map serves releases of a
        dataset which differ only in image format.
    '''

    mapping: __.immut.Dictionary[ str, int ]
    source: __.typx.Optional[ __.Path ] = None

    @property
    def sequence_ids( self ) -> frozenset[ int ]:
        ''' Distinct sequence identifiers. '''
        return frozenset( self.mapping.values( ) )

    def lookup( self, filename: str ) -> int:
        ''' Returns sequence of filename. '''
        stem = __.Path( filename ).stem
        if stem not in self.mapping:
            raise _exceptions.FilenameUnmapped( filename )
        return self.mapping[ stem ]


class PartitionProvenance( __.immut.DataclassObject ):
    ''' How a partition was produced. '''

    ratios: Ratios
    seed: __.typx.Optional[ int ] = None
    val_sequences: __.typx.Optional[ tuple[ int, ... ] ] = None
    test_sequences: __.typx.Optional[ tuple[ int, ... ] ] = None

    def render_as_json( self ) -> __.immut.Dictionary[ str, __.typx.Any ]:
        ''' Renders provenance as JSON-compatible dictionary. '''
        return __.immut.Dictionary[ str, __.typx.Any ](
            ratios = list( self.ratios ),
            seed = self.seed,
            val_sequences = (
                None if self.val_sequences is None
                else list( self.val_sequences ) ),
            test_sequences = (
                None if self.test_sequences is None
                else list( self.test_sequences ) ),
        )


class PartitionSpec( _results.ResultBase ):
    ''' Disjoint train, validation, and test filename lists. '''

    train: tuple[ str, ... ]
    val: tuple[ str, ... ]
    test: tuple[ str, ... ]
    method: _interfaces.PartitionMethod
    provenance: PartitionProvenance

    @property
    def sizes( self ) -> tuple[ int, int, int ]:
        ''' Member counts of train, validation, and test. '''
        return len( self.train ), len( self.val ), len( self.test )

    def access_partition(
        self, partition: _interfaces.Partition
    ) -> tuple[ str, ... ]:
        ''' Returns filenames of named partition. '''
        match partition:
            case _interfaces.Partition.Train: return self.train
            case _interfaces.Partition.Validation: return self.val
            case _interfaces.Partition.Test: return self.test

    def render_as_json( self ) -> __.immut.Dictionary[ str, __.typx.Any ]:
        return __.immut.Dictionary[ str, __.typx.Any ](
            method = self.method.value,
            provenance = dict( self.provenance.render_as_json( ) ),
            train = list( self.train ),
            val = list( self.val ),
            test = list( self.test ),
        )

    def render_as_markdown(
        self, /, *,
        reveal_internals: bool = False,
    ) -> tuple[ str, ... ]:
        total = sum( self.sizes ) or 1
        lines = [
            f"# Partition ({self.method.value})",
            '',
        ]
        for partition in _interfaces.Partition:
            count = len( self.access_partition( partition ) )
            lines.append(
                f"- **{partition.value}:** {count} "
                f"({100.0 * count / total:.2f}%)" )
        provenance = self.provenance
        if provenance.seed is not None:
            lines.append( f"- **seed:** {provenance.seed}" )
        if provenance.val_sequences is not None:
            lines.append(
                f"- **val sequences:** {list( provenance.val_sequences )}" )
        if provenance.test_sequences is not None:
            lines.append(
                f"- **test sequences:** {list( provenance.test_sequences )}" )
        return tuple( lines )


class SequenceLeak( __.immut.DataclassObject ):
    ''' Sequence whose frames span multiple partitions. '''

    sequence_id: int
    partitions: tuple[ _interfaces.Partition, ... ]


class LeakageReport( _results.ResultBase ):
    ''' Sequences whose frames appear in more than one partition. '''

    leaking_sequences: tuple[ SequenceLeak, ... ]

    @property
    def is_clean( self ) -> bool:
        ''' Whether no sequence spans partitions. '''
        return not self.leaking_sequences

    def render_as_json( self ) -> __.immut.Dictionary[ str, __.typx.Any ]:
        return __.immut.Dictionary[ str, __.typx.Any ](
            is_clean = self.is_clean,
            leaking_sequences = [
                dict(
                    sequence_id = leak.sequence_id,
                    partitions = [
                        partition.value for partition in leak.partitions ] )
                for leak in self.leaking_sequences ],
        )

    def render_as_markdown(
        self, /, *,
        reveal_internals: bool = False,
    ) -> tuple[ str, ... ]:
        if self.is_clean:
            return ( '# Leakage Audit: clean', '',
                     'No sequence spans more than one partition.' )
        lines = [
            '# Leakage Audit: leaking',
            '',
            f"{len( self.leaking_sequences )} sequences span partitions:",
        ]
        for leak in self.leaking_sequences:
            spans = ', '.join( p.value for p in leak.partitions )
            lines.append( f"- sequence {leak.sequence_id}: {spans}" )
        return tuple( lines )


def load_dataset(
    root: __.Path | str, kind: _interfaces.DatasetKind
) -> DatasetIndex:
    ''' Indexes image and mask pairs of dataset at root. '''
    root = __.Path( root )
    images_name, masks_name = _interfaces.dataset_layouts[ kind ]
    images = _survey_images( root, root / images_name )
    masks = _survey_images( root, root / masks_name )
    if not images: raise _exceptions.DatasetEmptiness( root )
    masks_by_stem: dict[ str, list[ str ] ] = { }
    for mask in masks:
        masks_by_stem.setdefault( __.Path( mask ).stem, [ ] ).append( mask )
    entries: list[ tuple[ str, str ] ] = [ ]
    for image in canonical_order( images ):
        candidates = masks_by_stem.get( __.Path( image ).stem, [ ] )
        if not candidates: raise _exceptions.MaskAbsence( image )
        entries.append( (
            f"{images_name}/{image}",
            f"{masks_name}/{_select_mask( image, candidates )}" ) )
    _scribe.debug( f"Indexed {len( entries )} pairs at '{root}'." )
    return DatasetIndex( root = root, kind = kind, entries = tuple( entries ) )


def survey_images( directory: __.Path | str ) -> tuple[ __.Path, ... ]:
    ''' Image files of directory in canonical order. '''
    directory = __.Path( directory )
    names = _survey_images( directory, directory )
    if not names: raise _exceptions.DatasetEmptiness( directory )
    return tuple( directory / name for name in canonical_order( names ) )


def resolve_pairs(
    index: DatasetIndex, names: __.cabc.Iterable[ str ]
) -> tuple[ tuple[ __.Path, __.Path ], ... ]:
    ''' Resolves image filenames to absolute image and mask paths. '''
    pairs = {
        __.Path( image ).name: ( index.root / image, index.root / mask )
        for image, mask in index.entries }
    resolved: list[ tuple[ __.Path, __.Path ] ] = [ ]
    for name in names:
        if name not in pairs:
            raise _exceptions.ManifestInvalidity(
                index.root, f"'{name}' is not in dataset" )
        resolved.append( pairs[ name ] )
    return tuple( resolved )


def load_sequence_map( location: __.Path | str ) -> SequenceMap:
    ''' Loads CSV sequence map with header 'filename,sequence_id'. '''
    location = __.Path( location )
    try: text = location.read_text( encoding = 'utf-8' )
    except ( OSError, UnicodeDecodeError ) as exc:
        raise _exceptions.SequenceMapInvalidity( location, exc ) from exc
    reader = __.csv.reader( __.io.StringIO( text ) )
    header = next( reader, None )
    if header != [ 'filename', 'sequence_id' ]:
        raise _exceptions.SequenceMapInvalidity(
            location, f"unexpected header {header!r}" )
    mapping: dict[ str, int ] = { }
    for number, row in enumerate( reader, start = 2 ):
        if not row: continue
        if len( row ) != 2:
            raise _exceptions.SequenceMapInvalidity(
                location, f"line {number} has {len( row )} fields" )
        filename, sequence = ( field.strip( ) for field in row )
        try: sequence_id = int( sequence )
        except ValueError as exc:
            raise _exceptions.SequenceMapInvalidity(
                location, f"line {number}: bad sequence {sequence!r}"
            ) from exc
        stem = __.Path( filename ).stem
        if not stem or stem in mapping:
            raise _exceptions.SequenceMapInvalidity(
                location, f"line {number}: duplicate or empty {filename!r}" )
        mapping[ stem ] = sequence_id
    if not mapping:
        raise _exceptions.SequenceMapInvalidity( location, 'no rows' )
    return SequenceMap(
        mapping = __.immut.Dictionary( mapping ), source = location )


def parse_ratios( text: str ) -> Ratios:
    ''' Parses comma-separated percentages, such as ``80,10,10``. '''
    try: values = [ float( part ) for part in text.split( ',' ) ]
    except ValueError as exc:
        raise _exceptions.RatiosInvalidity( text ) from exc
    return validate_ratios( values )


def validate_ratios( ratios: __.cabc.Sequence[ float ] ) -> Ratios:
    ''' Validates three finite non-negative percentages summing to 100. '''
    if len( ratios ) != 3: raise _exceptions.RatiosInvalidity( ratios )
    values = tuple( float( ratio ) for ratio in ratios )
    if not all( __.math.isfinite( v ) and v >= 0 for v in values ):
        raise _exceptions.RatiosInvalidity( ratios )
    if abs( sum( values ) - 100.0 ) > _RATIOS_TOLERANCE:
        raise _exceptions.RatiosInvalidity( ratios )
    return values[ 0 ], values[ 1 ], values[ 2 ]


def sorted_fixed_partition(
    index: DatasetIndex, ratios: __.cabc.Sequence[ float ]
) -> PartitionSpec:
    ''' Slices canonically sorted filenames by ratios. '''
    ratios_ = validate_ratios( ratios )
    names = canonical_order( index.filenames )
    if not names: raise _exceptions.DatasetEmptiness( index.root )
    train, val, test = _slice_by_ratios( names, ratios_ )
    return PartitionSpec(
        train = train, val = val, test = test,
        method = _interfaces.PartitionMethod.SortedFixed,
        provenance = PartitionProvenance( ratios = ratios_ ) )


def random_partition(
    index: DatasetIndex, ratios: __.cabc.Sequence[ float ], seed: int
) -> PartitionSpec:
    ''' Shuffles canonically sorted filenames with SplitMix64, then slices.

        Each partition is stored in canonical order.
    '''
    ratios_ = validate_ratios( ratios )
    names = canonical_order( index.filenames )
    if not names: raise _exceptions.DatasetEmptiness( index.root )
    shuffled = _randomness.SplitMix64( seed ).shuffle( names )
    train, val, test = _slice_by_ratios( shuffled, ratios_ )
    return PartitionSpec(
        train = canonical_order( train ),
        val = canonical_order( val ),
        test = canonical_order( test ),
        method = _interfaces.PartitionMethod.RandomSeeded,
        provenance = PartitionProvenance( ratios = ratios_, seed = seed ) )


def sequence_partition(
    index: DatasetIndex,
    seqmap: SequenceMap,
    val_sequences: __.cabc.Iterable[ int ],
    test_sequences: __.cabc.Iterable[ int ],
) -> PartitionSpec:
    ''' Assigns every frame of a sequence to one partition. '''
    val_ids = frozenset( val_sequences )
    test_ids = frozenset( test_sequences )
    shared = val_ids & test_ids
    if shared: raise _exceptions.SequenceSetsOverlap( shared )
    known = seqmap.sequence_ids
    for sequence_id in sorted( val_ids | test_ids ):
        if sequence_id not in known:
            raise _exceptions.SequenceIdUnknown( sequence_id )
    train: list[ str ] = [ ]
    val: list[ str ] = [ ]
    test: list[ str ] = [ ]
    names = canonical_order( index.filenames )
    for name in names:
        sequence_id = seqmap.lookup( name )
        if sequence_id in test_ids: test.append( name )
        elif sequence_id in val_ids: val.append( name )
        else: train.append( name )
    total = len( names ) or 1
    ratios = (
        round( 100.0 * len( train ) / total, 2 ),
        round( 100.0 * len( val ) / total, 2 ),
        round( 100.0 * len( test ) / total, 2 ) )
    return PartitionSpec(
        train = tuple( train ), val = tuple( val ), test = tuple( test ),
        method = _interfaces.PartitionMethod.SequenceGrouped,
        provenance = PartitionProvenance(
            ratios = ratios,
            val_sequences = tuple( sorted( val_ids ) ),
            test_sequences = tuple( sorted( test_ids ) ) ) )


def full_partition( index: DatasetIndex ) -> PartitionSpec:
    ''' Places every filename in test, for cross-dataset evaluation. '''
    names = canonical_order( index.filenames )
    if not names: raise _exceptions.DatasetEmptiness( index.root )
    return PartitionSpec(
        train = ( ), val = ( ), test = names,
        method = _interfaces.PartitionMethod.Full,
        provenance = PartitionProvenance( ratios = ( 0.0, 0.0, 100.0 ) ) )


def audit_leakage(
    spec: PartitionSpec, seqmap: SequenceMap
) -> LeakageReport:
    ''' Finds sequences whose frames appear in two or more partitions. '''
    spans: dict[ int, set[ _interfaces.Partition ] ] = { }
    for partition in _interfaces.Partition:
        for name in spec.access_partition( partition ):
            spans.setdefault( seqmap.lookup( name ), set( ) ).add( partition )
    order = tuple( _interfaces.Partition )
    leaks = tuple(
        SequenceLeak(
            sequence_id = sequence_id,
            partitions = tuple( p for p in order if p in partitions ) )
        for sequence_id, partitions in sorted( spans.items( ) )
        if len( partitions ) > 1 )
    return LeakageReport( leaking_sequences = leaks )


def save_manifest( spec: PartitionSpec, location: __.Path | str ) -> None:
    ''' Writes byte-stable JSON partition manifest. '''
    location = __.Path( location )
    location.parent.mkdir( parents = True, exist_ok = True )
    content = __.json.dumps(
        dict( spec.render_as_json( ) ), indent = 2, sort_keys = True )
    with location.open( 'w', encoding = 'utf-8', newline = '\n' ) as file:
        file.write( content + '\n' )


def load_manifest( location: __.Path | str ) -> PartitionSpec:
    ''' Loads and validates JSON partition manifest. '''
    location = __.Path( location )
    try: data = __.json.loads( location.read_text( encoding = 'utf-8' ) )
    except ( OSError, UnicodeDecodeError, ValueError ) as exc:
        raise _exceptions.ManifestInvalidity( location, exc ) from exc
    if not isinstance( data, dict ) or set( data ) != _manifest_keys:
        raise _exceptions.ManifestInvalidity(
            location, f"keys must be {sorted( _manifest_keys )}" )
    data = __.typx.cast( dict[ str, __.typx.Any ], data )
    try: method = _interfaces.PartitionMethod( data[ 'method' ] )
    except ValueError as exc:
        raise _exceptions.ManifestInvalidity( location, exc ) from exc
    members = {
        key: _validate_manifest_names( location, key, data[ key ] )
        for key in ( 'train', 'val', 'test' ) }
    if sum( map( len, members.values( ) ) ) != len(
        set( ).union( *members.values( ) )
    ): raise _exceptions.ManifestInvalidity( location, 'duplicate names' )
    provenance = _restore_provenance( location, data[ 'provenance' ] )
    return PartitionSpec(
        train = members[ 'train' ],
        val = members[ 'val' ],
        test = members[ 'test' ],
        method = method, provenance = provenance )


def _restore_provenance(
    location: __.Path, data: __.typx.Any
) -> PartitionProvenance:
    if not isinstance( data, dict ) or set( data ) != _provenance_keys:
        raise _exceptions.ManifestInvalidity(
            location, f"provenance keys must be {sorted( _provenance_keys )}" )
    data = __.typx.cast( dict[ str, __.typx.Any ], data )
    ratios = data[ 'ratios' ]
    if not isinstance( ratios, list ) or len( ratios ) != 3: # pyright: ignore
        raise _exceptions.ManifestInvalidity( location, 'bad ratios' )
    ratios = __.typx.cast( list[ float ], ratios )
    seed = data[ 'seed' ]
    if seed is not None and not isinstance( seed, int ):
        raise _exceptions.ManifestInvalidity( location, 'bad seed' )

    def restore_sequences( key: str ) -> tuple[ int, ... ] | None:
        value = data[ key ]
        if value is None: return None
        if not isinstance( value, list ) or not all(
            isinstance( item, int ) for item in value # pyright: ignore
        ): raise _exceptions.ManifestInvalidity( location, f"bad {key}" )
        return tuple( __.typx.cast( list[ int ], value ) )

    return PartitionProvenance(
        ratios = ( float( ratios[ 0 ] ), float( ratios[ 1 ] ),
                   float( ratios[ 2 ] ) ),
        seed = seed,
        val_sequences = restore_sequences( 'val_sequences' ),
        test_sequences = restore_sequences( 'test_sequences' ) )


def _select_mask( image: str, candidates: list[ str ] ) -> str:
    ''' Prefers mask with same suffix as image when stems collide. '''
    if len( candidates ) == 1: return candidates[ 0 ]
    suffix = __.Path( image ).suffix
    for candidate in canonical_order( candidates ):
        if __.Path( candidate ).suffix == suffix: return candidate
    return canonical_order( candidates )[ 0 ]


def _slice_by_ratios(
    names: __.cabc.Sequence[ str ], ratios: Ratios
) -> tuple[ tuple[ str, ... ], tuple[ str, ... ], tuple[ str, ... ] ]:
    ''' Floors train and validation counts; test takes remainder. '''
    count = len( names )
    train_count = __.math.floor( ratios[ 0 ] * count / 100.0 + 1e-9 )
    val_count = __.math.floor( ratios[ 1 ] * count / 100.0 + 1e-9 )
    val_end = min( count, train_count + val_count )
    return (
        tuple( names[ :train_count ] ),
        tuple( names[ train_count:val_end ] ),
        tuple( names[ val_end: ] ) )


def _survey_images( root: __.Path, directory: __.Path ) -> list[ str ]:
    if not root.is_dir( ):
        raise _exceptions.DatasetInaccessibility( root, 'not a directory' )
    if not directory.is_dir( ):
        raise _exceptions.DatasetInaccessibility(
            root, f"missing directory '{directory.name}'" )
    try:
        return [
            path.name for path in directory.iterdir( )
            if path.is_file( )
            and not path.name.startswith( '.' )
            and path.suffix.lower( ) in _interfaces.image_suffixes ]
    except OSError as exc:
        raise _exceptions.DatasetInaccessibility( root, exc ) from exc


def _validate_manifest_names(
    location: __.Path, key: str, value: __.typx.Any
) -> tuple[ str, ... ]:
    if not isinstance( value, list ) or not all(
        isinstance( item, str ) for item in value # pyright: ignore
    ): raise _exceptions.ManifestInvalidity( location, f"bad '{key}' list" )
    return tuple( __.typx.cast( list[ str ], value ) )
