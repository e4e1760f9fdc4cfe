from eksmor.main import main

main()
