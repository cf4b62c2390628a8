from seqalloc.cli import main

main()
