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


import json

from pathlib import Path

import pytest

import fcbswin.datakit as module

from fcbswin import __ as base
from fcbswin import exceptions
from fcbswin import interfaces

from .fixtures import produce_sequence_map_text


KVASIR = interfaces.DatasetKind.KvasirSEG
CVC = interfaces.DatasetKind.CVCClinicDB

EXAMPLE_SEQUENCE_MAP = base.provide_data_location(
    'sequences', 'cvc-clinicdb-example.csv' )
VAL_SEQUENCES = ( 4, 19, 26 )
TEST_SEQUENCES = ( 11, 18, 23 )


def _create_pairs(
    fs, root: Path, names, images = 'images', masks = 'masks'
) -> Path:
    fs.create_dir( root / images )
    fs.create_dir( root / masks )
    for name in names:
        fs.create_file( root / images / name )
        fs.create_file( root / masks / name )
    return root


def _index_of( names ) -> module.DatasetIndex:
    return module.DatasetIndex(
        root = Path( '/data' ), kind = KVASIR,
        entries = tuple(
            ( f"images/{name}", f"masks/{name}" ) for name in names ) )


def _cvc_index( ) -> module.DatasetIndex:
    return module.DatasetIndex(
        root = Path( '/cvc' ), kind = CVC,
        entries = tuple(
            ( f"Original/{n}.png", f"Ground Truth/{n}.png" )
            for n in range( 1, 613 ) ) )


def test_000_canonical_order_bytewise( ):
    ''' Sorting compares UTF-8 bytes, not digits or locale. '''
    assert module.canonical_order( [ 'img2.png', 'img10.png' ] ) == (
        'img10.png', 'img2.png' )
    assert module.canonical_order( [ 'b.png', 'a.png', 'B.png' ] ) == (
        'B.png', 'a.png', 'b.png' )


def test_100_load_dataset_orders_entries( fs ):
    ''' Entries come back in canonical order with paired masks. '''
    root = _create_pairs( fs, Path( '/kvasir' ), [ 'b.jpg', 'a.jpg' ] )
    index = module.load_dataset( root, KVASIR )
    assert index.image_count == 2
    assert index.filenames == ( 'a.jpg', 'b.jpg' )
    assert index.entries[ 0 ] == ( 'images/a.jpg', 'masks/a.jpg' )


def test_110_load_dataset_cvc_layout( fs ):
    ''' CVC-ClinicDB layout pairs masks by stem across formats. '''
    root = Path( '/cvc' )
    fs.create_file( root / 'Original' / '1.tif' )
    fs.create_file( root / 'Ground Truth' / '1.tif' )
    fs.create_file( root / 'Original' / '2.png' )
    fs.create_file( root / 'Ground Truth' / '2.tif' )
    index = module.load_dataset( root, CVC )
    assert index.entries == (
        ( 'Original/1.tif', 'Ground Truth/1.tif' ),
        ( 'Original/2.png', 'Ground Truth/2.tif' ) )


def test_120_load_dataset_ignores_other_files( fs ):
    ''' Hidden files and non-image files are skipped. '''
    root = _create_pairs( fs, Path( '/kvasir' ), [ 'a.jpg' ] )
    fs.create_file( root / 'images' / '.DS_Store.jpg' )
    fs.create_file( root / 'images' / 'notes.txt' )
    index = module.load_dataset( root, KVASIR )
    assert index.filenames == ( 'a.jpg', )


def test_130_load_dataset_missing_mask( fs ):
    ''' Image without mask is rejected. '''
    root = _create_pairs( fs, Path( '/kvasir' ), [ 'a.jpg' ] )
    fs.create_file( root / 'images' / 'b.jpg' )
    with pytest.raises( exceptions.MaskAbsence ):
        module.load_dataset( root, KVASIR )


def test_140_load_dataset_empty( fs ):
    ''' Dataset without images is rejected. '''
    root = _create_pairs( fs, Path( '/kvasir' ), [ ] )
    with pytest.raises( exceptions.DatasetEmptiness ):
        module.load_dataset( root, KVASIR )


def test_150_load_dataset_missing_root( fs ):
    ''' Missing root or subdirectory is rejected. '''
    with pytest.raises( exceptions.DatasetInaccessibility ):
        module.load_dataset( '/absent', KVASIR )
    fs.create_dir( '/kvasir/images' )
    with pytest.raises( exceptions.DatasetInaccessibility ):
        module.load_dataset( '/kvasir', KVASIR )


def test_160_resolve_pairs( ):
    ''' Filenames resolve to absolute image and mask paths. '''
    index = _index_of( [ 'a.jpg', 'b.jpg' ] )
    pairs = module.resolve_pairs( index, [ 'b.jpg' ] )
    assert pairs == (
        ( Path( '/data/images/b.jpg' ), Path( '/data/masks/b.jpg' ) ), )
    with pytest.raises( exceptions.ManifestInvalidity ):
        module.resolve_pairs( index, [ 'c.jpg' ] )


def test_170_survey_images( fs ):
    ''' Image files of a directory come back in canonical order. '''
    for name in ( 'b.png', 'a.jpg', 'B.tif', 'notes.txt', '.hidden.png' ):
        fs.create_file( Path( '/frames' ) / name )
    assert module.survey_images( '/frames' ) == (
        Path( '/frames/B.tif' ), Path( '/frames/a.jpg' ),
        Path( '/frames/b.png' ) )


def test_171_survey_images_rejects( fs ):
    ''' Missing and image-free directories are rejected. '''
    with pytest.raises( exceptions.DatasetInaccessibility ):
        module.survey_images( '/absent' )
    fs.create_file( '/frames/notes.txt' )
    with pytest.raises( exceptions.DatasetEmptiness ):
        module.survey_images( '/frames' )


@pytest.mark.parametrize( 'ratios', (
    ( 80, 10 ), ( 80, 10, 20 ), ( -10, 60, 50 ),
    ( float( 'nan' ), 50, 50 ),
) )
def test_200_validate_ratios_rejects( ratios ):
    ''' Ratios must be three finite non-negative values summing to 100. '''
    with pytest.raises( exceptions.RatiosInvalidity ):
        module.validate_ratios( ratios )


def test_201_parse_ratios( ):
    ''' Comma-separated percentages parse to validated ratios. '''
    assert module.parse_ratios( '80,10,10' ) == ( 80.0, 10.0, 10.0 )
    assert module.parse_ratios( ' 70.5, 14.75 ,14.75' ) == (
        70.5, 14.75, 14.75 )


@pytest.mark.parametrize( 'text', (
    '80,10', '80,10,20', 'eighty,10,10', '80;10;10', '', '80,,20',
) )
def test_202_parse_ratios_rejects( text ):
    ''' Malformed or unbalanced ratio text is rejected. '''
    with pytest.raises( exceptions.RatiosInvalidity ):
        module.parse_ratios( text )


def test_210_sorted_fixed_partition_sizes( ):
    ''' Floors train and validation; test takes remainder. '''
    names = [ f"{n:04d}.jpg" for n in range( 1000 ) ]
    spec = module.sorted_fixed_partition( _index_of( names ), ( 80, 10, 10 ) )
    assert spec.sizes == ( 800, 100, 100 )
    assert spec.train[ 0 ] == '0000.jpg'
    assert spec.test[ -1 ] == '0999.jpg'
    assert spec.method is interfaces.PartitionMethod.SortedFixed
    small = module.sorted_fixed_partition(
        _index_of( names[ :10 ] ), ( 80, 10, 10 ) )
    assert small.sizes == ( 8, 1, 1 )


def test_220_sorted_fixed_partition_bytewise( ):
    ''' Slicing follows bytewise order of names. '''
    spec = module.sorted_fixed_partition(
        _index_of( [ 'img2.png', 'img10.png' ] ), ( 50, 0, 50 ) )
    assert spec.train == ( 'img10.png', )
    assert spec.test == ( 'img2.png', )


def test_230_random_partition_deterministic( ):
    ''' Same seed yields identical partitions; sizes ignore seed. '''
    index = _index_of( [ f"{n:04d}.jpg" for n in range( 1000 ) ] )
    first = module.random_partition( index, ( 80, 10, 10 ), 7 )
    second = module.random_partition( index, ( 80, 10, 10 ), 7 )
    other = module.random_partition( index, ( 80, 10, 10 ), 8 )
    assert first == second
    assert first.sizes == other.sizes == ( 800, 100, 100 )
    assert first.test != other.test
    assert first.provenance.seed == 7
    assert list( first.test ) == sorted( first.test )


@pytest.mark.parametrize( 'method', ( 'sorted', 'random', 'sequence' ) )
def test_240_partitions_complete( method ):
    ''' Every filename lands in exactly one partition. '''
    index = _cvc_index( )
    if method == 'sorted':
        spec = module.sorted_fixed_partition( index, ( 70, 15, 15 ) )
    elif method == 'random':
        spec = module.random_partition( index, ( 70, 15, 15 ), 3 )
    else:
        spec = module.sequence_partition(
            index, module.load_sequence_map( EXAMPLE_SEQUENCE_MAP ),
            VAL_SEQUENCES, TEST_SEQUENCES )
    members = [ *spec.train, *spec.val, *spec.test ]
    assert len( members ) == len( set( members ) )
    assert set( members ) == set( index.filenames )


def test_300_sequence_partition_example_map( ):
    ''' Held-out sequences give the 504, 54, 54 split. '''
    seqmap = module.load_sequence_map( EXAMPLE_SEQUENCE_MAP )
    assert seqmap.sequence_ids == frozenset( range( 1, 30 ) )
    spec = module.sequence_partition(
        _cvc_index( ), seqmap, VAL_SEQUENCES, TEST_SEQUENCES )
    assert spec.sizes == ( 504, 54, 54 )
    assert spec.provenance.ratios == ( 82.35, 8.82, 8.82 )
    assert spec.provenance.val_sequences == ( 4, 19, 26 )
    assert spec.method is interfaces.PartitionMethod.SequenceGrouped


def test_310_sequence_partition_without_holdout( ):
    ''' Empty holdout sets keep every frame in train. '''
    seqmap = module.load_sequence_map( EXAMPLE_SEQUENCE_MAP )
    spec = module.sequence_partition( _cvc_index( ), seqmap, ( ), ( ) )
    assert spec.sizes == ( 612, 0, 0 )


def test_320_sequence_partition_rejects( ):
    ''' Overlapping or unknown sequences are rejected. '''
    seqmap = module.load_sequence_map( EXAMPLE_SEQUENCE_MAP )
    with pytest.raises( exceptions.SequenceSetsOverlap ):
        module.sequence_partition( _cvc_index( ), seqmap, { 4 }, { 4 } )
    with pytest.raises( exceptions.SequenceIdUnknown ):
        module.sequence_partition( _cvc_index( ), seqmap, { 99 }, { } )


def test_330_sequence_partition_unmapped( ):
    ''' Frames absent from sequence map are rejected. '''
    seqmap = module.SequenceMap(
        mapping = base.immut.Dictionary( { '1': 1 } ) )
    index = _index_of( [ '1.png', '2.png' ] )
    with pytest.raises( exceptions.FilenameUnmapped ):
        module.sequence_partition( index, seqmap, ( ), ( ) )


def test_400_audit_sequence_partition_clean( ):
    ''' Sequence-grouped partitions never leak. '''
    seqmap = module.load_sequence_map( EXAMPLE_SEQUENCE_MAP )
    spec = module.sequence_partition(
        _cvc_index( ), seqmap, VAL_SEQUENCES, TEST_SEQUENCES )
    report = module.audit_leakage( spec, seqmap )
    assert report.is_clean
    assert report.render_as_json( )[ 'is_clean' ] is True


def test_410_audit_random_partition_leaks( ):
    ''' Random frame-level partitions spread sequences across partitions. '''
    seqmap = module.load_sequence_map( EXAMPLE_SEQUENCE_MAP )
    spec = module.random_partition( _cvc_index( ), ( 80, 10, 10 ), 0 )
    report = module.audit_leakage( spec, seqmap )
    assert not report.is_clean
    assert len( report.leaking_sequences ) > 10


def test_420_audit_single_moved_frame( ):
    ''' Moving one frame across partitions flags exactly its sequence. '''
    seqmap = module.SequenceMap( mapping = base.immut.Dictionary(
        { 'a': 7, 'b': 7, 'c': 8 } ) )
    spec = module.PartitionSpec(
        train = ( 'a.png', ), val = ( 'c.png', ), test = ( 'b.png', ),
        method = interfaces.PartitionMethod.SortedFixed,
        provenance = module.PartitionProvenance( ratios = ( 34, 33, 33 ) ) )
    report = module.audit_leakage( spec, seqmap )
    assert len( report.leaking_sequences ) == 1
    leak = report.leaking_sequences[ 0 ]
    assert leak.sequence_id == 7
    assert leak.partitions == (
        interfaces.Partition.Train, interfaces.Partition.Test )
    assert report.render_as_markdown( )[ 0 ] == '# Leakage Audit: leaking'


def test_500_load_sequence_map_by_stem( fs ):
    ''' Lookups match by stem, regardless of image format. '''
    fs.create_file(
        '/map.csv', contents = produce_sequence_map_text( { 3: 2 } ) )
    seqmap = module.load_sequence_map( '/map.csv' )
    assert seqmap.lookup( '1.tif' ) == 3
    assert seqmap.lookup( '2.png' ) == 3
    with pytest.raises( exceptions.FilenameUnmapped ):
        seqmap.lookup( '3.png' )


@pytest.mark.parametrize( 'contents', (
    '',
    'name,sequence\n1.png,1\n',
    'filename,sequence_id\n',
    'filename,sequence_id\n1.png,one\n',
    'filename,sequence_id\n1.png,1\n1.tif,2\n',
    'filename,sequence_id\n1.png,1,extra\n',
) )
def test_510_load_sequence_map_rejects( fs, contents ):
    ''' Malformed sequence maps are rejected. '''
    fs.create_file( '/map.csv', contents = contents )
    with pytest.raises( exceptions.SequenceMapInvalidity ):
        module.load_sequence_map( '/map.csv' )


def test_600_manifest_round_trip( fs ):
    ''' Saved manifests restore to equal partitions, byte-stably. '''
    index = _index_of( [ f"{n}.png" for n in range( 20 ) ] )
    spec = module.random_partition( index, ( 80, 10, 10 ), 5 )
    module.save_manifest( spec, '/out/manifest.json' )
    first = Path( '/out/manifest.json' ).read_bytes( )
    restored = module.load_manifest( '/out/manifest.json' )
    assert restored == spec
    module.save_manifest( restored, '/out/manifest.json' )
    assert Path( '/out/manifest.json' ).read_bytes( ) == first
    assert first.endswith( b'\n' )
    assert b'\r' not in first


@pytest.mark.parametrize( 'mutation', (
    lambda data: data.pop( 'method' ),
    lambda data: data.update( method = 'bogus' ),
    lambda data: data.update( extra = 1 ),
    lambda data: data.update( train = [ 1, 2 ] ),
    lambda data: data.update( val = data[ 'train' ][ :1 ] ),
    lambda data: data[ 'provenance' ].update( seed = 'x' ),
    lambda data: data[ 'provenance' ].pop( 'ratios' ),
) )
def test_610_manifest_rejects( fs, mutation ):
    ''' Malformed manifests are rejected. '''
    index = _index_of( [ f"{n}.png" for n in range( 10 ) ] )
    spec = module.sorted_fixed_partition( index, ( 80, 10, 10 ) )
    data = json.loads( json.dumps( dict( spec.render_as_json( ) ) ) )
    mutation( data )
    fs.create_file( '/manifest.json', contents = json.dumps( data ) )
    with pytest.raises( exceptions.ManifestInvalidity ):
        module.load_manifest( '/manifest.json' )


def test_620_manifest_unreadable( fs ):
    ''' Missing or non-JSON manifests are rejected. '''
    with pytest.raises( exceptions.ManifestInvalidity ):
        module.load_manifest( '/absent.json' )
    fs.create_file( '/broken.json', contents = '{ nope' )
    with pytest.raises( exceptions.ManifestInvalidity ):
        module.load_manifest( '/broken.json' )


def test_700_full_partition( ):
    ''' Cross-dataset evaluation places everything in test. '''
    spec = module.full_partition( _index_of( [ 'b.png', 'a.png' ] ) )
    assert spec.test == ( 'a.png', 'b.png' )
    assert spec.sizes == ( 0, 0, 2 )
    assert spec.method is interfaces.PartitionMethod.Full


def test_710_partition_markdown( ):
    ''' Markdown rendering lists partition sizes and percentages. '''
    spec = module.sorted_fixed_partition(
        _index_of( [ f"{n}.png" for n in range( 10 ) ] ), ( 80, 10, 10 ) )
    lines = spec.render_as_markdown( )
    assert lines[ 0 ] == '# Partition (sorted-fixed)'
    assert '- **train:** 8 (80.00%)' in lines
