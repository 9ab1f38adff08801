# !/usr/bin/python

from setuptools import setup, find_packages


def get_version():
    f = open('lipexp/constants.py')
    for line in f:
        if 'version' in line:
            return eval(line.split('=')[-1])

VERSION = get_version().split('-')[0]
SHORT_DESC = "Lipschitz guards for experimental optimization"
LONG_DESC = """
Runs guarded constraint-adaptation and modifier-adaptation campaigns on
simulated plants, refines noisy measurements with Lipschitz bounds and
estimates Lipschitz constants from models, physics and data
"""

if __name__ == "__main__":
    # where stuff lands
    confpath = "etc/lipexp"

    setup(
        name="lipexp",
        version=VERSION,
        license="GPL",
        packages=find_packages(exclude=['tests']),
        python_requires='>=3.7',
        install_requires=['numpy', 'scipy'],
        extras_require={'test': ['pytest', 'hypothesis']},
        include_package_data=True,
        entry_points={'console_scripts': ['lipexp = lipexp:_main']},
        data_files=[
            # config files
            (confpath, ['etc/lipexp.conf',
                        'etc/guarded-ca.spec',
                        'etc/trim-compare.spec',
                        'etc/estimate-physics.spec'])
        ],
        description=SHORT_DESC,
        long_description=LONG_DESC
    )
