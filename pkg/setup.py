from setuptools import setup, find_packages

setup(
    name='occflow',
    version='0.1.0',
    description="Self-supervised 3D occupancy and scene flow on voxel SDF grids.",
    packages=find_packages(exclude=['tests', 'tests.*']),
    classifiers=[
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
    ],
    python_requires='>=3.8',
    install_requires=[
        'setuptools',
        'numpy',
        'scipy',
        'torch',
        'tqdm',
        'Pillow'
    ],
    entry_points={
        'console_scripts': [
            'occflow=occflow.cli:main',
        ],
    },
)
