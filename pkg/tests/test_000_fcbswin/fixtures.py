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


''' Synthetic datasets and helpers shared across test modules. '''


import asyncio
import sys

from pathlib import Path

import numpy as np

from PIL import Image


def write_image(
    location: Path, height: int, width: int, seed: int = 0
) -> Path:
    ''' Writes deterministic RGB noise image. '''
    generator = np.random.default_rng( seed )
    pixels = generator.integers(
        0, 256, size = ( height, width, 3 ), dtype = np.uint8 )
    location.parent.mkdir( parents = True, exist_ok = True )
    Image.fromarray( pixels ).save( location )
    return location


def write_mask(
    location: Path,
    height: int,
    width: int,
    box: tuple[ int, int, int, int ] | None = None,
) -> Path:
    ''' Writes mask with 255 inside box (top, left, bottom, right). '''
    pixels = np.zeros( ( height, width ), dtype = np.uint8 )
    if box is not None:
        top, left, bottom, right = box
        pixels[ top:bottom, left:right ] = 255
    location.parent.mkdir( parents = True, exist_ok = True )
    Image.fromarray( pixels ).save( location )
    return location


def produce_kvasir_dataset(
    root: Path, count: int = 6, height: int = 40, width: int = 48
) -> Path:
    ''' Writes Kvasir-style dataset of noise images with box masks. '''
    for index in range( count ):
        name = f"case{index:02d}.png"
        write_image( root / 'images' / name, height, width, seed = index )
        box = ( 4 + index, 6, height // 2 + index, width // 2 )
        write_mask( root / 'masks' / name, height, width, box )
    return root


def produce_sequence_map_text( counts: dict[ int, int ] ) -> str:
    ''' Sequence map CSV with contiguous frames named ``N.png``. '''
    lines = [ 'filename,sequence_id' ]
    frame = 1
    for sequence_id, count in counts.items( ):
        for _ in range( count ):
            lines.append( f"{frame}.png,{sequence_id}" )
            frame += 1
    return '\n'.join( lines ) + '\n'


class CompletedCommand:
    ''' Outcome of running the command-line interface in a subprocess. '''

    def __init__( self, returncode: int, stdout: str, stderr: str ):
        self.returncode = returncode
        self.stdout = stdout
        self.stderr = stderr


async def run_cli_command( args: list[ str ] ) -> CompletedCommand:
    ''' Runs CLI in subprocess and captures its streams. '''
    process = await asyncio.create_subprocess_exec(
        sys.executable, '-m', 'fcbswin', *args,
        stdout = asyncio.subprocess.PIPE,
        stderr = asyncio.subprocess.PIPE )
    stdout, stderr = await process.communicate( )
    return CompletedCommand(
        returncode = process.returncode or 0,
        stdout = stdout.decode( ),
        stderr = stderr.decode( ) )
