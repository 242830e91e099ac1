public class Main {
    public static void main(String[] args) {
        long counter = 0;
        while (true) {
            counter++;
        }
    }
}
